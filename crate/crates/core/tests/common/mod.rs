//! Shared test oracle: brute-force second-quantized matrix elements.
//!
//! Determinants are taken as ordered operator products, α creation operators
//! ascending followed by β creation operators ascending. Everything here is
//! evaluated by explicit operator application with sign tracking, completely
//! independent of the Slater-Condon code under test.

use gasci::gas::Determinant;
use gasci::integrals::IntegralStore;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct OccState {
    pub alpha: Vec<usize>,
    pub beta: Vec<usize>,
}

impl OccState {
    pub fn from_det(d: &Determinant) -> Self {
        OccState { alpha: d.alpha.iter().collect(), beta: d.beta.iter().collect() }
    }

    fn list(&mut self, beta: bool) -> &mut Vec<usize> {
        if beta {
            &mut self.beta
        } else {
            &mut self.alpha
        }
    }

    /// Apply `c_{p,σ}`; returns the fermionic sign or None if unoccupied.
    pub fn annihilate(&mut self, beta: bool, p: usize) -> Option<f64> {
        let n_alpha = self.alpha.len();
        let list = self.list(beta);
        let pos = list.iter().position(|&x| x == p)?;
        list.remove(pos);
        let crossings = pos + if beta { n_alpha } else { 0 };
        Some(if crossings % 2 == 0 { 1.0 } else { -1.0 })
    }

    /// Apply `c†_{p,σ}`; returns the sign or None if already occupied.
    pub fn create(&mut self, beta: bool, p: usize) -> Option<f64> {
        let n_alpha = self.alpha.len();
        let list = self.list(beta);
        if list.contains(&p) {
            return None;
        }
        let pos = list.iter().position(|&x| x > p).unwrap_or(list.len());
        list.insert(pos, p);
        let crossings = pos + if beta { n_alpha } else { 0 };
        Some(if crossings % 2 == 0 { 1.0 } else { -1.0 })
    }
}

/// `<I| c†_{pσ} c_{qσ} |J>` summed over σ.
pub fn one_body_overlap(i: &OccState, j: &OccState, p: usize, q: usize) -> f64 {
    let mut acc = 0.0;
    for beta in [false, true] {
        let mut s = j.clone();
        let Some(s1) = s.annihilate(beta, q) else { continue };
        let Some(s2) = s.create(beta, p) else { continue };
        if s == *i {
            acc += s1 * s2;
        }
    }
    acc
}

/// `<I| c†_{pσ} c†_{rτ} c_{sτ} c_{qσ} |J>` summed over σ, τ.
pub fn two_body_overlap(
    i: &OccState,
    j: &OccState,
    p: usize,
    q: usize,
    r: usize,
    s: usize,
) -> f64 {
    let mut acc = 0.0;
    for sigma in [false, true] {
        for tau in [false, true] {
            let mut st = j.clone();
            let Some(s1) = st.annihilate(sigma, q) else { continue };
            let Some(s2) = st.annihilate(tau, s) else { continue };
            let Some(s3) = st.create(tau, r) else { continue };
            let Some(s4) = st.create(sigma, p) else { continue };
            if st == *i {
                acc += s1 * s2 * s3 * s4;
            }
        }
    }
    acc
}

/// Full Hamiltonian matrix element by operator strings.
pub fn oracle_h_element(di: &Determinant, dj: &Determinant, store: &IntegralStore) -> f64 {
    let i = OccState::from_det(di);
    let j = OccState::from_det(dj);
    let n = store.n_orbitals();
    let mut acc = 0.0;
    for p in 0..n {
        for q in 0..n {
            let h = store.h[(p, q)];
            if h != 0.0 {
                acc += h * one_body_overlap(&i, &j, p, q);
            }
        }
    }
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    let w = store.get_w(p, q, r, s);
                    if w != 0.0 {
                        acc += 0.5 * w * two_body_overlap(&i, &j, p, q, r, s);
                    }
                }
            }
        }
    }
    acc
}

/// Dipole matrix element by operator strings.
pub fn oracle_d_element(di: &Determinant, dj: &Determinant, store: &IntegralStore) -> f64 {
    let i = OccState::from_det(di);
    let j = OccState::from_det(dj);
    let n = store.n_orbitals();
    let mut acc = 0.0;
    for p in 0..n {
        for q in 0..n {
            let d = store.d[(p, q)];
            if d != 0.0 {
                acc += d * one_body_overlap(&i, &j, p, q);
            }
        }
    }
    acc
}

/// Spin-summed one-particle density matrix element `Σ_σ <I|c†_pσ c_qσ|J>`.
pub fn oracle_rdm_overlap(di: &Determinant, dj: &Determinant, p: usize, q: usize) -> f64 {
    one_body_overlap(&OccState::from_det(di), &OccState::from_det(dj), p, q)
}
