//! Restricted closed-shell Hartree-Fock on FE-DVR grids.
//!
//! With the δ-structured FE-DVR integrals the Fock matrix takes a
//! particularly cheap form: the Hartree term is a node-wise sum over the
//! density diagonal and the exchange term is an elementwise product of the
//! density matrix with the node-pair interaction,
//!
//! ```text
//! F_pq = h_pq + δ_pq Σ_r w(x_p, x_r) P_rr - 1/2 P_pq w(x_p, x_q)
//! ```
//!
//! Used for reference orbitals, Koopmans ionization potentials, and the
//! `N_el - 2` Hartree potential entering the improved pseudo orbitals.

use crate::fedvr::FedvrGrid;
use crate::model::{EeInteraction, PotentialSpec};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct ScfOptions {
    pub tol_energy: f64,
    pub tol_density: f64,
    pub max_iterations: usize,
    /// Linear mixing factor for the new density (1.0 = no damping).
    pub mixing: f64,
    /// DIIS acceleration on top of the damped iteration.
    pub diis: bool,
    /// Scale factor on the electron-electron interaction (1.0 physical).
    pub ee_scale: f64,
}

impl Default for ScfOptions {
    fn default() -> Self {
        ScfOptions {
            tol_energy: 1e-12,
            tol_density: 1e-10,
            max_iterations: 500,
            mixing: 0.5,
            diis: true,
            ee_scale: 1.0,
        }
    }
}

/// Converged restricted Hartree-Fock data.
#[derive(Debug, Clone)]
pub struct HfResult {
    /// All canonical orbitals as columns, ascending orbital energy.
    pub orbital_coefficients: DMatrix<f64>,
    pub orbital_energies: DVector<f64>,
    pub e_hf: f64,
    /// Closed-shell density matrix `P = 2 C_occ C_occ^T`.
    pub density_matrix: DMatrix<f64>,
    pub n_el: usize,
    pub iterations: usize,
}

impl HfResult {
    pub fn n_occupied(&self) -> usize {
        self.n_el / 2
    }

    /// Occupied orbitals as columns.
    pub fn occupied(&self) -> DMatrix<f64> {
        let n = self.orbital_coefficients.nrows();
        let mut occ = DMatrix::zeros(n, self.n_occupied());
        for i in 0..self.n_occupied() {
            occ.set_column(i, &self.orbital_coefficients.column(i));
        }
        occ
    }

    /// Koopmans ionization potential `-ε_i` of occupied orbital `i`.
    pub fn koopmans_ip(&self, i: usize) -> f64 {
        -self.orbital_energies[i]
    }
}

/// Solve restricted HF for `n_el` electrons on the given grid (pass the
/// central subgrid for a `(-x_c, x_c)` reference, the full grid otherwise).
pub fn solve_hf(
    grid: &FedvrGrid,
    potential: &PotentialSpec,
    ee: &EeInteraction,
    n_el: usize,
    opts: &ScfOptions,
) -> Result<HfResult> {
    if n_el == 0 || n_el % 2 != 0 {
        return Err(Error::Invalid(format!(
            "restricted HF needs a positive even electron count, got {n_el}"
        )));
    }
    let n = grid.n_b();
    let n_occ = n_el / 2;
    if n_occ > n {
        return Err(Error::Invalid(format!("{n_el} electrons do not fit in {n} orbitals")));
    }
    potential.validate()?;

    let t = grid.kinetic_matrix();
    let v = grid.diagonal_potential(|x| potential.value(x))?;
    let mut h = t;
    for p in 0..n {
        h[(p, p)] += v[p];
    }
    let w = node_interaction(grid, ee, opts.ee_scale);

    let fock = |p: &DMatrix<f64>| -> DMatrix<f64> {
        let mut f = h.clone();
        let hartree = &w * p.diagonal();
        for i in 0..n {
            f[(i, i)] += hartree[i];
        }
        // exchange: -1/2 P ∘ W
        for j in 0..n {
            for i in 0..n {
                f[(i, j)] -= 0.5 * p[(i, j)] * w[(i, j)];
            }
        }
        f
    };
    let energy = |p: &DMatrix<f64>, f: &DMatrix<f64>| -> f64 {
        0.5 * p.iter().zip(h.iter().zip(f.iter())).map(|(pi, (hi, fi))| pi * (hi + fi)).sum::<f64>()
    };

    // core guess
    let mut p_mat = density_from_fock(&h, n_occ).2;
    let mut e_old = f64::INFINITY;
    let mut diis = DiisState::new(8);

    for it in 1..=opts.max_iterations {
        let mut f = fock(&p_mat);
        if opts.diis {
            // commutator [F, P] vanishes at convergence (orthonormal basis)
            let err = &f * &p_mat - &p_mat * &f;
            f = diis.extrapolate(f, err);
        }
        let (energies, coeffs, p_new) = density_from_fock(&f, n_occ);
        let f_clean = fock(&p_new);
        let e = energy(&p_new, &f_clean);
        let dp = (&p_new - &p_mat).amax();
        let de = (e - e_old).abs();
        let mixed = if opts.diis { p_new.clone() } else { &p_new * opts.mixing + &p_mat * (1.0 - opts.mixing) };
        p_mat = mixed;
        e_old = e;
        if de < opts.tol_energy && dp < opts.tol_density {
            return Ok(HfResult {
                orbital_coefficients: coeffs,
                orbital_energies: energies,
                e_hf: e,
                density_matrix: p_new,
                n_el,
                iterations: it,
            });
        }
    }
    Err(Error::ScfNotConverged {
        iterations: opts.max_iterations,
        energy_drift: (e_old - energy(&p_mat, &fock(&p_mat))).abs(),
    })
}

/// Hartree potential of the `n_el - 2` electron system on the grid nodes,
/// `v_H(x_p) = Σ_q w(x_p, x_q) n^{HF-2}(x_q)`; identically zero for two
/// electrons.
pub fn hartree_potential_minus2(
    grid: &FedvrGrid,
    potential: &PotentialSpec,
    ee: &EeInteraction,
    n_el: usize,
    opts: &ScfOptions,
) -> Result<DVector<f64>> {
    if n_el < 2 || n_el % 2 != 0 {
        return Err(Error::Invalid(format!(
            "Hartree potential of the N-2 system needs even n_el >= 2, got {n_el}"
        )));
    }
    let n = grid.n_b();
    if n_el == 2 {
        return Ok(DVector::zeros(n));
    }
    let hf = solve_hf(grid, potential, ee, n_el - 2, opts)?;
    let w = node_interaction(grid, ee, 1.0);
    // density-matrix diagonal already carries the quadrature weights, so the
    // integral over x' reduces to a plain node sum
    Ok(&w * hf.density_matrix.diagonal())
}

/// Node-pair interaction table `w(x_p, x_r)`.
pub fn node_interaction(grid: &FedvrGrid, ee: &EeInteraction, scale: f64) -> DMatrix<f64> {
    let n = grid.n_b();
    DMatrix::from_fn(n, n, |p, r| scale * ee.value(grid.nodes[p], grid.nodes[r]))
}

fn density_from_fock(f: &DMatrix<f64>, n_occ: usize) -> (DVector<f64>, DMatrix<f64>, DMatrix<f64>) {
    let n = f.nrows();
    let eig = f.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let mut energies = DVector::zeros(n);
    let mut coeffs = DMatrix::zeros(n, n);
    for (k, &j) in order.iter().enumerate() {
        energies[k] = eig.eigenvalues[j];
        coeffs.set_column(k, &eig.eigenvectors.column(j));
    }
    let mut p = DMatrix::zeros(n, n);
    for i in 0..n_occ {
        let c = coeffs.column(i);
        p.ger(2.0, &c, &c, 1.0);
    }
    (energies, coeffs, p)
}

struct DiisState {
    max_vecs: usize,
    focks: Vec<DMatrix<f64>>,
    errors: Vec<DMatrix<f64>>,
}

impl DiisState {
    fn new(max_vecs: usize) -> Self {
        DiisState { max_vecs, focks: Vec::new(), errors: Vec::new() }
    }

    fn extrapolate(&mut self, f: DMatrix<f64>, err: DMatrix<f64>) -> DMatrix<f64> {
        self.focks.push(f);
        self.errors.push(err);
        if self.focks.len() > self.max_vecs {
            self.focks.remove(0);
            self.errors.remove(0);
        }
        let m = self.focks.len();
        if m < 2 {
            return self.focks[m - 1].clone();
        }
        // Pulay equations with the Lagrange-multiplier border
        let mut b = DMatrix::zeros(m + 1, m + 1);
        for i in 0..m {
            for j in 0..m {
                b[(i, j)] = self.errors[i].dot(&self.errors[j]);
            }
            b[(i, m)] = -1.0;
            b[(m, i)] = -1.0;
        }
        let mut rhs = DVector::zeros(m + 1);
        rhs[m] = -1.0;
        match b.lu().solve(&rhs) {
            Some(c) => {
                let mut out = DMatrix::zeros(self.focks[0].nrows(), self.focks[0].ncols());
                for i in 0..m {
                    out += &self.focks[i] * c[i];
                }
                out
            }
            None => {
                // singular subspace: fall back to the newest Fock matrix
                self.focks.drain(..m - 1);
                self.errors.drain(..m - 1);
                self.focks[0].clone()
            }
        }
    }
}
