//! Soft-Coulomb model potentials, electron-electron interaction, laser
//! pulses, and the absorbing-potential shape. All quantities in atomic units.

use crate::{Error, Result};

/// Nuclear binding potential: a single regularized atom or a diatomic with
/// the charges `z1` at `x = +r/2` and `z2` at `x = -r/2`.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    Atom { z: f64, s: f64 },
    Diatomic { z1: f64, z2: f64, r: f64, s: f64 },
}

impl PotentialSpec {
    pub fn atom(z: f64) -> Self {
        PotentialSpec::Atom { z, s: 1.0 }
    }

    pub fn diatomic(z1: f64, z2: f64, r: f64) -> Self {
        PotentialSpec::Diatomic { z1, z2, r, s: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            PotentialSpec::Atom { z, s } => z > 0.0 && s > 0.0,
            PotentialSpec::Diatomic { z1, z2, r, s } => z1 > 0.0 && z2 > 0.0 && r >= 0.0 && s > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("invalid potential spec: {self:?}")))
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match *self {
            PotentialSpec::Atom { z, s } => -z / (x * x + s * s).sqrt(),
            PotentialSpec::Diatomic { z1, z2, r, s } => {
                let dp = x - 0.5 * r;
                let dm = x + 0.5 * r;
                -z1 / (dp * dp + s * s).sqrt() - z2 / (dm * dm + s * s).sqrt()
            }
        }
    }

    /// Regularized nuclear repulsion `z1 z2 / sqrt(r^2 + s^2)`; errors for atoms.
    pub fn internuclear_repulsion(&self) -> Result<f64> {
        match *self {
            PotentialSpec::Diatomic { z1, z2, r, s } => Ok(z1 * z2 / (r * r + s * s).sqrt()),
            PotentialSpec::Atom { .. } => Err(Error::Invalid(
                "internuclear repulsion requested for an atomic potential".into(),
            )),
        }
    }
}

/// Softened binary interaction `1 / sqrt((x1-x2)^2 + s^2)`.
#[derive(Debug, Clone, Copy)]
pub struct EeInteraction {
    pub s: f64,
}

impl EeInteraction {
    pub fn new(s: f64) -> Result<Self> {
        if s > 0.0 {
            Ok(EeInteraction { s })
        } else {
            Err(Error::Invalid(format!("softening parameter must be positive, got {s}")))
        }
    }

    #[inline]
    pub fn value(&self, x1: f64, x2: f64) -> f64 {
        let d = x1 - x2;
        1.0 / (d * d + self.s * self.s).sqrt()
    }
}

impl Default for EeInteraction {
    fn default() -> Self {
        EeInteraction { s: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseShape {
    /// Pure Gaussian `F0 exp(-(t-t0)^2 / 2σ^2)` (a "dipole kick" for small σ).
    HalfCycle,
    /// Gaussian envelope times `cos(ω(t-t0) + φ_CEP)`.
    EnvelopedCos,
}

#[derive(Debug, Clone, Copy)]
pub struct PulseSpec {
    pub shape: PulseShape,
    pub f0: f64,
    pub sigma: f64,
    pub t0: f64,
    pub omega: f64,
    pub phi_cep: f64,
}

impl PulseSpec {
    pub fn half_cycle(f0: f64, sigma: f64, t0: f64) -> Self {
        PulseSpec { shape: PulseShape::HalfCycle, f0, sigma, t0, omega: 0.0, phi_cep: 0.0 }
    }

    pub fn enveloped(f0: f64, sigma: f64, t0: f64, omega: f64, phi_cep: f64) -> Self {
        PulseSpec { shape: PulseShape::EnvelopedCos, f0, sigma, t0, omega, phi_cep }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma > 0.0 {
            Ok(())
        } else {
            Err(Error::Invalid(format!("pulse duration must be positive, got {}", self.sigma)))
        }
    }

    pub fn field(&self, t: f64) -> f64 {
        let dt = t - self.t0;
        let env = self.f0 * (-dt * dt / (2.0 * self.sigma * self.sigma)).exp();
        match self.shape {
            PulseShape::HalfCycle => env,
            PulseShape::EnvelopedCos => env * (self.omega * dt + self.phi_cep).cos(),
        }
    }
}

/// Total field of a pulse train.
pub fn total_field(pulses: &[PulseSpec], t: f64) -> f64 {
    pulses.iter().map(|p| p.field(t)).sum()
}

/// Absorbing-potential shape: `1 - cos(π(|x| - r_cap) / 2(x_s - r_cap))` for
/// `|x| > r_cap`, zero inside. Equals 1 at the box edge `|x| = x_s`.
pub fn cap_value(x: f64, r_cap: f64, x_s: f64) -> f64 {
    let ax = x.abs();
    if ax <= r_cap {
        0.0
    } else {
        1.0 - (std::f64::consts::FRAC_PI_2 * (ax - r_cap) / (x_s - r_cap)).cos()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn nuclear_potential_values() {
        let he = PotentialSpec::atom(2.0);
        assert_abs_diff_eq!(he.value(0.0), -2.0, epsilon = 1e-15);

        let h2 = PotentialSpec::diatomic(1.0, 1.0, 0.0);
        assert_abs_diff_eq!(h2.value(0.0), -2.0, epsilon = 1e-15);

        let lih = PotentialSpec::diatomic(3.0, 1.0, 3.0);
        assert_abs_diff_eq!(lih.value(1.5), -3.0 - 1.0 / 10.0_f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn atomic_potential_is_even() {
        let be = PotentialSpec::atom(4.0);
        for &x in &[0.3, 1.7, 5.0, 11.2] {
            assert_eq!(be.value(x), be.value(-x));
        }
        let homo = PotentialSpec::diatomic(1.0, 1.0, 2.5);
        for &x in &[0.3, 1.7, 5.0] {
            assert_abs_diff_eq!(homo.value(x), homo.value(-x), epsilon = 1e-15);
        }
    }

    #[test]
    fn ee_interaction_values() {
        let w = EeInteraction::default();
        assert_abs_diff_eq!(w.value(0.7, 0.7), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.value(0.0, 3.0_f64.sqrt()), 0.5, epsilon = 1e-15);
        assert_eq!(w.value(1.2, -0.4), w.value(-0.4, 1.2));
    }

    #[test]
    fn internuclear_repulsion_values() {
        let lih0 = PotentialSpec::diatomic(3.0, 1.0, 0.0);
        assert_abs_diff_eq!(lih0.internuclear_repulsion().unwrap(), 3.0, epsilon = 1e-15);
        let lih3 = PotentialSpec::diatomic(3.0, 1.0, 3.0);
        assert_abs_diff_eq!(
            lih3.internuclear_repulsion().unwrap(),
            3.0 / 10.0_f64.sqrt(),
            epsilon = 1e-15
        );
        let far = PotentialSpec::diatomic(3.0, 1.0, 1e6);
        assert!(far.internuclear_repulsion().unwrap() < 1e-5);
        assert!(PotentialSpec::atom(2.0).internuclear_repulsion().is_err());
    }

    #[test]
    fn field_values() {
        let p = PulseSpec::enveloped(0.01, 5.0, 20.0, 2.1, 0.0);
        assert_abs_diff_eq!(p.field(20.0), 0.01, epsilon = 1e-15);
        let p_pi = PulseSpec::enveloped(0.01, 5.0, 20.0, 2.1, std::f64::consts::PI);
        assert_abs_diff_eq!(p_pi.field(20.0), -0.01, epsilon = 1e-15);

        // kick parameters: σ=0.1, t0=1, F0=0.001
        let kick = PulseSpec::half_cycle(0.001, 0.1, 1.0);
        assert_abs_diff_eq!(kick.field(1.1), 0.001 * (-0.5_f64).exp(), epsilon = 1e-18);
        assert_abs_diff_eq!(kick.field(0.9), 0.001 * (-0.5_f64).exp(), epsilon = 1e-18);
    }

    #[test]
    fn field_bounded_and_decaying() {
        let p = PulseSpec::enveloped(0.05, 30.0, 120.0, 0.57, 0.3);
        let mut t = -500.0;
        while t < 1000.0 {
            assert!(p.field(t).abs() <= 0.05 + 1e-15);
            t += 1.3;
        }
        assert!(p.field(120.0 + 40.0 * 30.0).abs() < 1e-300);
    }

    #[test]
    fn cap_shape() {
        assert_eq!(cap_value(5.0, 20.0, 40.0), 0.0);
        assert_eq!(cap_value(-20.0, 20.0, 40.0), 0.0);
        assert_abs_diff_eq!(cap_value(40.0, 20.0, 40.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(cap_value(-40.0, 20.0, 40.0), 1.0, epsilon = 1e-15);
        // nondecreasing in |x|
        let mut prev = 0.0;
        let mut x = 0.0;
        while x <= 40.0 {
            let v = cap_value(x, 20.0, 40.0);
            assert!(v >= prev - 1e-15);
            prev = v;
            x += 0.25;
        }
    }
}
