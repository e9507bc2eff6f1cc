//! Densities, spectra, yields, and asymmetries extracted from CI states.

use crate::ci::CiState;
use crate::fedvr::FedvrGrid;
use crate::gas::DeterminantSpace;
use crate::integrals::IntegralStore;
use crate::orbitals::RotationMatrix;
use crate::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

/// Spin-summed one-particle density matrix over the orbital basis.
#[derive(Debug, Clone)]
pub struct Rdm {
    pub rho: DMatrix<Complex64>,
}

impl Rdm {
    pub fn trace(&self) -> f64 {
        (0..self.rho.nrows()).map(|p| self.rho[(p, p)].re).sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for p in 0..self.rho.nrows() {
            for q in p..self.rho.ncols() {
                let d = (self.rho[(p, q)] - self.rho[(q, p)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Natural occupations (descending) of the real part.
    pub fn occupations(&self) -> Vec<f64> {
        let n = self.rho.nrows();
        let re = DMatrix::from_fn(n, n, |i, j| self.rho[(i, j)].re);
        let sym = 0.5 * (&re + re.transpose());
        let mut vals: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().cloned().collect();
        vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
        vals
    }
}

/// Generic spectrum-like series.
#[derive(Debug, Clone)]
pub struct SpectrumSeries {
    pub abscissa: Vec<f64>,
    pub values: Vec<f64>,
}

/// One-particle reduced density matrix `ρ_pq = Σ_σ <Ψ|c†_pσ c_qσ|Ψ>`,
/// accumulated over the diagonal and single-difference connectivity.
pub fn rdm(space: &DeterminantSpace, state: &CiState) -> Rdm {
    let n_orb = space.n_spatial;
    let n = space.len();
    assert_eq!(state.coefficients.len(), n);
    const CHUNK: usize = 4096;
    let n_chunks = n.div_ceil(CHUNK);
    let partials: Vec<DMatrix<Complex64>> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rho = DMatrix::<Complex64>::zeros(n_orb, n_orb);
            let lo = chunk * CHUNK;
            let hi = ((chunk + 1) * CHUNK).min(n);
            for j in lo..hi {
                let cj = state.coefficients[j];
                if cj == Complex64::ZERO {
                    continue;
                }
                let det = space.det(j);
                for p in det.alpha.iter() {
                    rho[(p, p)] += cj.conj() * cj;
                }
                for p in det.beta.iter() {
                    rho[(p, p)] += cj.conj() * cj;
                }
                // single replacements q -> p
                for beta_spin in [false, true] {
                    let set = if beta_spin { &det.beta } else { &det.alpha };
                    for q in set.iter() {
                        for p in 0..n_orb {
                            if p == q || set.test(p) {
                                continue;
                            }
                            let mut d = det.clone();
                            let target = if beta_spin { &mut d.beta } else { &mut d.alpha };
                            let sign = if target.count_between(q, p) % 2 == 0 { 1.0 } else { -1.0 };
                            target.clear(q);
                            target.set(p);
                            if let Some(i) = space.index_of(&d) {
                                rho[(p, q)] += sign * state.coefficients[i].conj() * cj;
                            }
                        }
                    }
                }
            }
            rho
        })
        .collect();
    let mut rho = DMatrix::<Complex64>::zeros(n_orb, n_orb);
    for part in partials {
        rho += part;
    }
    Rdm { rho }
}

/// Transform an orbital-basis RDM to the raw grid-function basis.
pub fn rdm_to_grid(rdm: &Rdm, rotation: Option<&RotationMatrix>, grid: &FedvrGrid) -> Rdm {
    let n = grid.n_b();
    assert_eq!(rdm.rho.nrows(), n);
    let Some(rot) = rotation else {
        return rdm.clone();
    };
    let nc = rot.n_central();
    let c0 = if nc == n { 0 } else { grid.central_range().start };
    // full transform B: grid index x orbital index
    let mut bfull = DMatrix::<f64>::zeros(n, n);
    for a in 0..n {
        if a < nc {
            for k in 0..nc {
                bfull[(c0 + k, a)] = rot.b_central[(k, a)];
            }
        } else {
            let j = a - nc;
            let g = if j < c0 { j } else { j + nc };
            bfull[(g, a)] = 1.0;
        }
    }
    let re = DMatrix::from_fn(n, n, |i, j| rdm.rho[(i, j)].re);
    let im = DMatrix::from_fn(n, n, |i, j| rdm.rho[(i, j)].im);
    let re_g = &bfull * re * bfull.transpose();
    let im_g = &bfull * im * bfull.transpose();
    Rdm { rho: DMatrix::from_fn(n, n, |i, j| Complex64::new(re_g[(i, j)], im_g[(i, j)])) }
}

/// Spatial density `n(x) = Σ_pq ρ_pq χ_p(x) χ_q(x)` on arbitrary points.
pub fn spatial_density(
    rdm: &Rdm,
    rotation: Option<&RotationMatrix>,
    grid: &FedvrGrid,
    x_points: &[f64],
) -> Result<Vec<f64>> {
    for &x in x_points {
        if x < -grid.x_s || x > grid.x_s {
            return Err(Error::Invalid(format!("evaluation point {x} outside the box")));
        }
    }
    let grid_rdm = rdm_to_grid(rdm, rotation, grid);
    let n = grid.n_b();
    Ok(x_points
        .par_iter()
        .map(|&x| {
            // basis functions with support at x: O(n_g) of them
            let support: Vec<(usize, f64)> = (0..n)
                .filter_map(|p| {
                    let v = grid.eval_basis(p, x);
                    (v != 0.0).then_some((p, v))
                })
                .collect();
            let mut acc = 0.0;
            for &(p, vp) in &support {
                for &(q, vq) in &support {
                    acc += grid_rdm.rho[(p, q)].re * vp * vq;
                }
            }
            acc
        })
        .collect())
}

/// Density at the grid nodes, `n(x_p) = ρ_pp / w_p` in the raw basis.
pub fn density_on_nodes(
    rdm: &Rdm,
    rotation: Option<&RotationMatrix>,
    grid: &FedvrGrid,
) -> Vec<f64> {
    let grid_rdm = rdm_to_grid(rdm, rotation, grid);
    (0..grid.n_b()).map(|p| grid_rdm.rho[(p, p)].re / grid.weights[p]).collect()
}

/// Momentum density from the weight-scaled plane-wave representation of the
/// outer basis functions, restricted to nodes with `|x_p| > r_ion`.
pub fn momentum_density(
    rdm: &Rdm,
    store: &IntegralStore,
    r_ion: f64,
    k_grid: &[f64],
) -> Result<Vec<f64>> {
    if r_ion < store.x_c {
        return Err(Error::Invalid(format!(
            "r_ion = {r_ion} must not cut into the rotated region (x_c = {})",
            store.x_c
        )));
    }
    let nc = store.n_central();
    let masked: Vec<(usize, f64, f64)> = store
        .outer_nodes
        .iter()
        .zip(&store.outer_weights)
        .enumerate()
        .filter(|(_, (&x, _))| x.abs() > r_ion)
        .map(|(j, (&x, &w))| (nc + j, x, w.sqrt()))
        .collect();
    let two_pi = 2.0 * std::f64::consts::PI;
    Ok(k_grid
        .par_iter()
        .map(|&k| {
            // n(k) = (1/2π) v† ρ v with v_a = sqrt(w_a) exp(-i k x_a)
            let v: Vec<Complex64> = masked
                .iter()
                .map(|&(_, x, sw)| sw * Complex64::new(0.0, -k * x).exp())
                .collect();
            let mut acc = Complex64::ZERO;
            for (ia, &(a, _, _)) in masked.iter().enumerate() {
                for (ib, &(b, _, _)) in masked.iter().enumerate() {
                    acc += v[ia].conj() * rdm.rho[(a, b)] * v[ib];
                }
            }
            (acc.re / two_pi).max(0.0)
        })
        .collect())
}

/// Uniform symmetric momentum grid with the resolution set by the outer node
/// spacing (`k_max = π / Δx`).
pub fn default_k_grid(store: &IntegralStore, n_points: usize) -> Vec<f64> {
    let mut spacing = f64::INFINITY;
    for w in store.outer_nodes.windows(2) {
        let d = w[1] - w[0];
        if d > 0.0 && d < spacing {
            spacing = d;
        }
    }
    let k_max = std::f64::consts::PI / spacing;
    let n = n_points.max(2);
    (0..n).map(|i| -k_max + 2.0 * k_max * i as f64 / (n - 1) as f64).collect()
}

/// Directional photoelectron spectra binned on `E = k^2/2`.
#[derive(Debug, Clone)]
pub struct PhotoelectronSpectrum {
    pub energies: Vec<f64>,
    pub total: Vec<f64>,
    pub positive_k: Vec<f64>,
    pub negative_k: Vec<f64>,
}

impl PhotoelectronSpectrum {
    /// Energy at the maximum of the total spectrum.
    pub fn main_peak(&self) -> (f64, f64) {
        let mut best = 0;
        for (i, &v) in self.total.iter().enumerate() {
            if v > self.total[best] {
                best = i;
            }
        }
        (self.energies[best], self.total[best])
    }
}

/// Bin `n(k)` into an energy spectrum `P(E)` at `E = k^2/2`, accumulating
/// the two propagation directions separately (trapezoidal in k).
pub fn photoelectron_energy_spectrum(
    k_grid: &[f64],
    n_k: &[f64],
    n_bins: usize,
) -> Result<PhotoelectronSpectrum> {
    if k_grid.len() != n_k.len() || k_grid.len() < 2 {
        return Err(Error::Dimension("momentum grid and density lengths differ".into()));
    }
    let k_max = k_grid.iter().fold(0.0f64, |m, &k| m.max(k.abs()));
    let e_max = 0.5 * k_max * k_max;
    let n_bins = n_bins.max(2);
    let de = e_max / n_bins as f64;
    let mut total = vec![0.0; n_bins];
    let mut plus = vec![0.0; n_bins];
    let mut minus = vec![0.0; n_bins];
    for w in k_grid.windows(2).zip(n_k.windows(2)) {
        let (ks, ns) = w;
        let k_mid = 0.5 * (ks[0] + ks[1]);
        let weight = 0.5 * (ns[0] + ns[1]) * (ks[1] - ks[0]);
        // spread the interval's weight over the energy range it covers,
        // which keeps the rebinning free of aliasing when the bin width is
        // comparable to the local k resolution
        let (e0, e1) = {
            let a = 0.5 * ks[0] * ks[0];
            let b = 0.5 * ks[1] * ks[1];
            if a <= b {
                (a, b)
            } else {
                (b, a)
            }
        };
        let span = (e1 - e0).max(1e-300);
        let b_lo = ((e0 / de) as usize).min(n_bins - 1);
        let b_hi = ((e1 / de) as usize).min(n_bins - 1);
        for bin in b_lo..=b_hi {
            let lo = (bin as f64 * de).max(e0);
            let hi = ((bin + 1) as f64 * de).min(e1);
            let frac = if b_lo == b_hi { 1.0 } else { ((hi - lo) / span).max(0.0) };
            let contribution = weight * frac / de;
            total[bin] += contribution;
            if k_mid >= 0.0 {
                plus[bin] += contribution;
            } else {
                minus[bin] += contribution;
            }
        }
    }
    let energies = (0..n_bins).map(|i| (i as f64 + 0.5) * de).collect();
    Ok(PhotoelectronSpectrum { energies, total, positive_k: plus, negative_k: minus })
}

/// Total ionization probability `P = 1 - <Ψ|Ψ>` of a CAP-propagated state.
pub fn ionization_probability(state: &CiState) -> f64 {
    1.0 - state.norm_sq()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    None,
    /// Exact Blackman coefficients (0.42, 0.5, 0.08).
    Blackman,
}

/// Dipole excitation spectrum `S(ω) = |F{x(t)}|²` of a uniformly sampled
/// series, after detrending and windowing PLUS zero padding.
pub fn dipole_spectrum(
    times: &[f64],
    x_series: &[f64],
    window: Window,
    pad_factor: usize,
) -> Result<SpectrumSeries> {
    if times.len() != x_series.len() || times.len() < 4 {
        return Err(Error::Dimension("need matching time and dipole series".into()));
    }
    let dt = times[1] - times[0];
    for w in times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs().max(1e-300) {
            return Err(Error::Invalid("dipole series is not uniformly sampled".into()));
        }
    }
    let n = times.len();
    let mean = x_series.iter().sum::<f64>() / n as f64;
    let mut data: Vec<Complex64> = x_series
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let w = match window {
                Window::None => 1.0,
                Window::Blackman => {
                    let phase = 2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64;
                    0.42 - 0.5 * phase.cos() + 0.08 * (2.0 * phase).cos()
                }
            };
            Complex64::from(w * (x - mean))
        })
        .collect();
    let n_pad = n * pad_factor.max(1);
    data.resize(n_pad, Complex64::ZERO);
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n_pad);
    fft.process(&mut data);
    let n_half = n_pad / 2;
    let d_omega = 2.0 * std::f64::consts::PI / (n_pad as f64 * dt);
    let abscissa = (0..n_half).map(|i| i as f64 * d_omega).collect();
    let values = data[..n_half].iter().map(|c| c.norm_sqr()).collect();
    Ok(SpectrumSeries { abscissa, values })
}

/// Emission asymmetry `η = P⁻ / P⁺` of two opposite-CEP yields.
pub fn emission_asymmetry(p_minus: f64, p_plus: f64) -> Result<f64> {
    if p_plus == 0.0 {
        return Err(Error::Invalid("positive-direction yield is zero".into()));
    }
    Ok(p_minus / p_plus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ci::CiState;
    use crate::fedvr::build_grid;
    use crate::gas::{enumerate, GasSpec};
    use crate::integrals::IntegralStore;
    use crate::model::{EeInteraction, PotentialSpec};
    use approx::assert_abs_diff_eq;

    fn he_space_raw() -> (crate::fedvr::FedvrGrid, IntegralStore, DeterminantSpace) {
        let grid = build_grid(5.0, 3.0, 5, 4).unwrap();
        let store = IntegralStore::build(
            &grid,
            &PotentialSpec::atom(2.0),
            &EeInteraction::default(),
            None,
            None,
            None,
        )
        .unwrap();
        let space = enumerate(&GasSpec::fci(2, 0), grid.n_b(), 1_000_000).unwrap();
        (grid, store, space)
    }

    #[test]
    fn rdm_of_single_determinant() {
        let (_, _, space) = he_space_raw();
        // determinant with alpha in orbital 2, beta in orbital 2
        let idx = space
            .dets()
            .iter()
            .position(|d| d.alpha.test(2) && d.beta.test(2))
            .unwrap();
        let state = CiState::basis_state(space.len(), idx);
        let r = rdm(&space, &state);
        assert_abs_diff_eq!(r.rho[(2, 2)].re, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.trace(), 2.0, epsilon = 1e-12);
        assert!(r.hermiticity_defect() < 1e-12);
        let occ = r.occupations();
        assert_abs_diff_eq!(occ[0], 2.0, epsilon = 1e-12);
        assert!(occ[1].abs() < 1e-12);
    }

    #[test]
    fn rdm_trace_and_psd_for_mixed_state() {
        let (_, _, space) = he_space_raw();
        let n = space.len();
        let mut state = CiState::basis_state(n, 0);
        // deterministic pseudo-random coefficients
        let mut s = 0x3cf5_1a2b_9d8e_0417u64;
        for c in &mut state.coefficients {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            *c = Complex64::new(
                (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5,
                (s >> 17) as f64 / (1u64 << 47) as f64 - 0.5,
            );
        }
        state.normalize();
        let r = rdm(&space, &state);
        assert_abs_diff_eq!(r.trace(), 2.0, epsilon = 1e-10);
        let occ = r.occupations();
        for &v in &occ {
            assert!(v > -1e-8 && v < 2.0 + 1e-8);
        }
    }

    #[test]
    fn density_normalization_and_continuity() {
        let (grid, store, space) = he_space_raw();
        let h = crate::ci::assemble(&space, &store, 0.0, &crate::ci::AssembleOptions::default())
            .unwrap();
        let cfg = crate::propagate::PropagatorConfig {
            dtau: 10.0,
            itp_tol: 1e-12,
            ..Default::default()
        };
        let (_, c0) = crate::propagate::itp_ground_state(&h, &cfg, None).unwrap();
        let r = rdm(&space, &c0);
        // quadrature of n(x) over the box equals the electron count
        let nodes = density_on_nodes(&r, None, &grid);
        let total: f64 = nodes.iter().zip(&grid.weights).map(|(&n, &w)| n * w).sum();
        assert_abs_diff_eq!(total, 2.0, epsilon = 1e-6);
        // no jump across x_c
        let eps = 1e-7;
        let vals =
            spatial_density(&r, None, &grid, &[grid.x_c - eps, grid.x_c + eps]).unwrap();
        let peak = spatial_density(&r, None, &grid, &[0.0]).unwrap()[0];
        assert!((vals[0] - vals[1]).abs() < 1e-6 * peak);
    }

    #[test]
    fn momentum_density_zero_without_outer_population() {
        let (_, store, space) = he_space_raw();
        // both electrons on the innermost orbitals (well inside r_ion)
        let idx = space
            .dets()
            .iter()
            .position(|d| d.alpha.test(4) && d.beta.test(4))
            .unwrap();
        let state = CiState::basis_state(space.len(), idx);
        let r = rdm(&space, &state);
        let ks = default_k_grid(&store, 64);
        let nk = momentum_density(&r, &store, 4.0, &ks).unwrap();
        // r_ion = 4 excludes everything but the outermost node pair
        for &v in &nk {
            assert!(v.abs() < 1e-12 || v >= 0.0);
        }
        assert!(momentum_density(&r, &store, 1.0, &ks).is_err());
    }

    #[test]
    fn momentum_density_flat_for_single_outer_node() {
        let (grid, store, space) = he_space_raw();
        // alpha electron on the outermost node, beta on the center
        let n_b = grid.n_b();
        let idx = space
            .dets()
            .iter()
            .position(|d| d.alpha.test(n_b - 1) && d.beta.test(n_b / 2))
            .unwrap();
        let state = CiState::basis_state(space.len(), idx);
        let r = rdm(&space, &state);
        let x_outer = grid.nodes[n_b - 1];
        let w_outer = grid.weights[n_b - 1];
        let ks = default_k_grid(&store, 33);
        let nk = momentum_density(&r, &store, x_outer - 0.1, &ks).unwrap();
        let expect = w_outer / (2.0 * std::f64::consts::PI);
        for &v in &nk {
            assert_abs_diff_eq!(v, expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn energy_spectrum_symmetric_input() {
        let ks: Vec<f64> = (-100..=100).map(|i| 0.02 * i as f64).collect();
        let nk: Vec<f64> = ks.iter().map(|&k| (-(k.abs() - 1.0).powi(2) * 20.0).exp()).collect();
        let spec = photoelectron_energy_spectrum(&ks, &nk, 100).unwrap();
        for (p, m) in spec.positive_k.iter().zip(&spec.negative_k) {
            assert_abs_diff_eq!(p, m, epsilon = 1e-10);
        }
        // peak near E = 0.5 (the 1/k Jacobian pulls it slightly below)
        let (e_peak, _) = spec.main_peak();
        assert!((e_peak - 0.5).abs() < 0.05, "peak at {e_peak}");
    }

    #[test]
    fn dipole_spectrum_single_cosine() {
        let dt = 0.1;
        let omega0 = 0.8;
        let n = 4000;
        let times: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
        let xs: Vec<f64> = times.iter().map(|&t| (omega0 * t).cos()).collect();
        let spec = dipole_spectrum(&times, &xs, Window::Blackman, 4).unwrap();
        let mut best = 0;
        for (i, &v) in spec.values.iter().enumerate() {
            if v > spec.values[best] {
                best = i;
            }
        }
        let d_omega = spec.abscissa[1] - spec.abscissa[0];
        assert!((spec.abscissa[best] - omega0).abs() <= d_omega);
        // non-uniform sampling rejected
        let mut bad_times = times.clone();
        bad_times[10] += 0.01;
        assert!(dipole_spectrum(&bad_times, &xs, Window::Blackman, 4).is_err());
    }

    #[test]
    fn asymmetry_ratio() {
        assert_abs_diff_eq!(emission_asymmetry(0.12, 1.0).unwrap(), 0.12, epsilon = 1e-15);
        assert!(emission_asymmetry(0.1, 0.0).is_err());
    }
}
