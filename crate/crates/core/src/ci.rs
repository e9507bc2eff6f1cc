//! Sparse CI matrices over a determinant space and the σ-vector kernel.
//!
//! Matrix elements follow the Slater-Condon rules with a fermionic sign
//! convention in which each determinant is the ordered product of α
//! creation operators (ascending orbital) followed by β creation operators.
//! Candidate connected determinants are generated from the integral
//! sparsity itself: single excitations follow the one-electron coupling
//! pattern (dense central block, banded outer kinetic, bridge-mediated
//! central-outer terms), and double excitations can only move electrons
//! between central orbitals, because every other two-electron pattern is
//! structurally zero in the mixed basis. Matrices are stored as the upper
//! triangle in compressed-row form.

use crate::gas::{Determinant, DeterminantSpace, OrbSet};
use crate::integrals::IntegralStore;
use crate::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;

/// Upper-triangle (including diagonal) compressed-row symmetric matrix.
#[derive(Debug, Clone)]
pub struct SparseSym {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<u32>,
    pub vals: Vec<f64>,
}

impl SparseSym {
    pub fn nnz_stored(&self) -> usize {
        self.vals.len()
    }

    fn from_rows(n: usize, rows: Vec<Vec<(u32, f64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let total: usize = rows.iter().map(|r| r.len()).sum();
        let mut cols = Vec::with_capacity(total);
        let mut vals = Vec::with_capacity(total);
        for mut row in rows {
            row.sort_unstable_by_key(|&(c, _)| c);
            debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        SparseSym { n, row_ptr, cols, vals }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            if r.start < r.end && self.cols[r.start] as usize == i {
                d[i] = self.vals[r.start];
            }
        }
        d
    }

    /// `y += scale * A x` with the symmetric completion of the stored upper
    /// triangle. Chunked with a fixed block size and reduced in chunk order,
    /// so results are bitwise identical for any thread count.
    pub fn accumulate_complex(&self, scale: f64, x: &[Complex64], y: &mut [Complex64]) {
        const CHUNK: usize = 2048;
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        if self.n <= 2 * CHUNK {
            self.accumulate_serial_complex(scale, x, y);
            return;
        }
        let n_chunks = self.n.div_ceil(CHUNK);
        let partials: Vec<Vec<Complex64>> = (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let mut part = vec![Complex64::ZERO; self.n];
                let lo = c * CHUNK;
                let hi = ((c + 1) * CHUNK).min(self.n);
                for i in lo..hi {
                    let xi = x[i];
                    let mut acc = Complex64::ZERO;
                    for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                        let j = self.cols[k] as usize;
                        let v = self.vals[k];
                        acc += v * x[j];
                        if j != i {
                            part[j] += v * xi;
                        }
                    }
                    part[i] += acc;
                }
                part
            })
            .collect();
        for part in partials {
            for (yi, pi) in y.iter_mut().zip(part) {
                *yi += scale * pi;
            }
        }
    }

    fn accumulate_serial_complex(&self, scale: f64, x: &[Complex64], y: &mut [Complex64]) {
        for i in 0..self.n {
            let xi = x[i];
            let mut acc = Complex64::ZERO;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[k] as usize;
                let v = self.vals[k];
                acc += v * x[j];
                if j != i {
                    y[j] += scale * (v * xi);
                }
            }
            y[i] += scale * acc;
        }
    }

    /// Real variant of [`SparseSym::accumulate_complex`].
    pub fn accumulate_real(&self, scale: f64, x: &[f64], y: &mut [f64]) {
        const CHUNK: usize = 2048;
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        if self.n <= 2 * CHUNK {
            for i in 0..self.n {
                let xi = x[i];
                let mut acc = 0.0;
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    let j = self.cols[k] as usize;
                    let v = self.vals[k];
                    acc += v * x[j];
                    if j != i {
                        y[j] += scale * (v * xi);
                    }
                }
                y[i] += scale * acc;
            }
            return;
        }
        let n_chunks = self.n.div_ceil(CHUNK);
        let partials: Vec<Vec<f64>> = (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let mut part = vec![0.0; self.n];
                let lo = c * CHUNK;
                let hi = ((c + 1) * CHUNK).min(self.n);
                for i in lo..hi {
                    let xi = x[i];
                    let mut acc = 0.0;
                    for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                        let j = self.cols[k] as usize;
                        let v = self.vals[k];
                        acc += v * x[j];
                        if j != i {
                            part[j] += v * xi;
                        }
                    }
                    part[i] += acc;
                }
                part
            })
            .collect();
        for part in partials {
            for (yi, pi) in y.iter_mut().zip(part) {
                *yi += scale * pi;
            }
        }
    }
}

/// Time-dependent CI operator `H(t) = H0 + F(t) D - i V_CAP`.
#[derive(Debug, Clone)]
pub struct SparseHamiltonian {
    pub h0: SparseSym,
    pub dipole: SparseSym,
    /// Determinant-diagonal absorbing potential (nonnegative).
    pub cap: Vec<f64>,
    /// Scalar added to reported total energies (internuclear repulsion).
    pub nuclear_offset: f64,
    /// Hash of the determinant space the matrices were assembled over.
    pub space_hash: u64,
}

impl SparseHamiltonian {
    pub fn n(&self) -> usize {
        self.h0.n
    }

    pub fn has_cap(&self) -> bool {
        self.cap.iter().any(|&c| c != 0.0)
    }
}

/// Complex CI coefficient vector with its time stamp.
#[derive(Debug, Clone)]
pub struct CiState {
    pub coefficients: Vec<Complex64>,
    pub time: f64,
}

impl CiState {
    pub fn basis_state(n: usize, index: usize) -> Self {
        let mut c = vec![Complex64::ZERO; n];
        c[index] = Complex64::ONE;
        CiState { coefficients: c, time: 0.0 }
    }

    pub fn norm_sq(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            for c in &mut self.coefficients {
                *c /= n;
            }
        }
    }

    pub fn dot(&self, other: &CiState) -> Complex64 {
        self.coefficients
            .iter()
            .zip(&other.coefficients)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

#[derive(Debug, Clone)]
pub struct AssembleOptions {
    /// Elements below this magnitude are not stored.
    pub drop_tol: f64,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        AssembleOptions { drop_tol: 1e-14 }
    }
}

/// Assemble the field-free Hamiltonian, the dipole matrix, and the CAP
/// diagonal over the determinant space.
pub fn assemble(
    space: &DeterminantSpace,
    store: &IntegralStore,
    nuclear_offset: f64,
    opts: &AssembleOptions,
) -> Result<SparseHamiltonian> {
    if space.n_spatial != store.n_orbitals() {
        return Err(Error::Dimension(format!(
            "space over {} orbitals, integrals over {}",
            space.n_spatial,
            store.n_orbitals()
        )));
    }
    let n = space.len();
    let adjacency = store.one_electron_adjacency(opts.drop_tol);
    let n_c = store.n_central();

    let rows: Vec<RowOutput> = (0..n)
        .into_par_iter()
        .map(|i| assemble_row(i, space, store, &adjacency, n_c, opts.drop_tol))
        .collect();

    let mut h_rows = Vec::with_capacity(n);
    let mut d_rows = Vec::with_capacity(n);
    let mut cap = Vec::with_capacity(n);
    for r in rows {
        h_rows.push(r.h);
        d_rows.push(r.d);
        cap.push(r.cap);
    }
    Ok(SparseHamiltonian {
        h0: SparseSym::from_rows(n, h_rows),
        dipole: SparseSym::from_rows(n, d_rows),
        cap,
        nuclear_offset,
        space_hash: space.content_hash(),
    })
}

/// Apply `H(t) = H0 + f_t D - i V_CAP` to a coefficient vector.
pub fn sigma(
    h: &SparseHamiltonian,
    f_t: f64,
    use_cap: bool,
    c: &[Complex64],
) -> Vec<Complex64> {
    let mut y = vec![Complex64::ZERO; h.n()];
    h.h0.accumulate_complex(1.0, c, &mut y);
    if f_t != 0.0 {
        h.dipole.accumulate_complex(f_t, c, &mut y);
    }
    if use_cap {
        for ((yi, &ci), &v) in y.iter_mut().zip(c).zip(&h.cap) {
            *yi -= Complex64::new(0.0, v) * ci;
        }
    }
    y
}

/// Determinant-diagonal CAP values (sums of the one-electron CAP diagonal
/// over occupied orbitals).
pub fn cap_vector(space: &DeterminantSpace, store: &IntegralStore) -> DVectorF64 {
    (0..space.len())
        .map(|i| {
            let det = space.det(i);
            det.alpha.iter().map(|p| store.cap_diag[p]).sum::<f64>()
                + det.beta.iter().map(|p| store.cap_diag[p]).sum::<f64>()
        })
        .collect()
}

type DVectorF64 = Vec<f64>;

struct RowOutput {
    h: Vec<(u32, f64)>,
    d: Vec<(u32, f64)>,
    cap: f64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Spin {
    Alpha,
    Beta,
}

fn assemble_row(
    i: usize,
    space: &DeterminantSpace,
    store: &IntegralStore,
    adjacency: &[Vec<u32>],
    n_c: usize,
    drop_tol: f64,
) -> RowOutput {
    let det = space.det(i);
    let aocc: Vec<usize> = det.alpha.iter().collect();
    let bocc: Vec<usize> = det.beta.iter().collect();
    let profile = space.occupation_profile(det);

    let mut h_row: Vec<(u32, f64)> = Vec::new();
    let mut d_row: Vec<(u32, f64)> = Vec::new();

    // diagonal
    let mut e = 0.0;
    let mut dd = 0.0;
    let mut cap = 0.0;
    for occ in [&aocc, &bocc] {
        for &p in occ.iter() {
            e += store.h[(p, p)];
            dd += store.d[(p, p)];
            cap += store.cap_diag[p];
        }
        for (k, &p) in occ.iter().enumerate() {
            for &q in &occ[k + 1..] {
                e += store.coulomb(p, q) - store.exchange(p, q);
            }
        }
    }
    for &p in &aocc {
        for &q in &bocc {
            e += store.coulomb(p, q);
        }
    }
    h_row.push((i as u32, e));
    if dd.abs() > drop_tol {
        d_row.push((i as u32, dd));
    }

    // single excitations
    for spin in [Spin::Alpha, Spin::Beta] {
        let (occ_set, occ_same, occ_opp) = match spin {
            Spin::Alpha => (&det.alpha, &aocc, &bocc),
            Spin::Beta => (&det.beta, &bocc, &aocc),
        };
        for &p in occ_same.iter() {
            for &q32 in &adjacency[p] {
                let q = q32 as usize;
                if occ_set.test(q) {
                    continue;
                }
                if !single_feasible(space, &profile, p, q, spin) {
                    continue;
                }
                let Some((j, sign)) = excited_index(space, det, spin, p, q) else {
                    continue;
                };
                if j < i {
                    continue; // handled by the mirror row
                }
                let mut val = store.h[(p, q)];
                for &k in occ_same.iter() {
                    if k != p {
                        val += store.get_w(p, q, k, k) - store.get_w(p, k, k, q);
                    }
                }
                for &k in occ_opp.iter() {
                    val += store.get_w(p, q, k, k);
                }
                let sval = sign * val;
                if sval.abs() > drop_tol {
                    h_row.push((j as u32, sval));
                }
                let dval = sign * store.d[(p, q)];
                if dval.abs() > drop_tol {
                    d_row.push((j as u32, dval));
                }
            }
        }
    }

    // double excitations: only central holes and particles can couple
    let a_central: Vec<usize> = aocc.iter().copied().filter(|&p| p < n_c).collect();
    let b_central: Vec<usize> = bocc.iter().copied().filter(|&p| p < n_c).collect();

    // same-spin doubles
    for spin in [Spin::Alpha, Spin::Beta] {
        let (occ_set, holes) = match spin {
            Spin::Alpha => (&det.alpha, &a_central),
            Spin::Beta => (&det.beta, &b_central),
        };
        for (ih, &p1) in holes.iter().enumerate() {
            for &p2 in &holes[ih + 1..] {
                for q1 in 0..n_c {
                    if occ_set.test(q1) {
                        continue;
                    }
                    for q2 in q1 + 1..n_c {
                        if occ_set.test(q2) {
                            continue;
                        }
                        if !double_feasible_same(space, &profile, p1, p2, q1, q2, spin) {
                            continue;
                        }
                        let Some((j, sign)) =
                            double_excited_index_same(space, det, spin, p1, p2, q1, q2)
                        else {
                            continue;
                        };
                        if j < i {
                            continue;
                        }
                        let val = sign
                            * (store.get_w(p1, q1, p2, q2) - store.get_w(p1, q2, p2, q1));
                        if val.abs() > drop_tol {
                            h_row.push((j as u32, val));
                        }
                    }
                }
            }
        }
    }

    // opposite-spin doubles
    for &p in &a_central {
        for &r in &b_central {
            for q in 0..n_c {
                if det.alpha.test(q) {
                    continue;
                }
                let s_a = sign_of_single(&det.alpha, p, q);
                for s in 0..n_c {
                    if det.beta.test(s) {
                        continue;
                    }
                    if !double_feasible_opposite(space, &profile, p, q, r, s) {
                        continue;
                    }
                    let mut d = det.clone();
                    d.alpha.clear(p);
                    d.alpha.set(q);
                    d.beta.clear(r);
                    d.beta.set(s);
                    let Some(j) = space.index_of(&d) else { continue };
                    if j < i {
                        continue;
                    }
                    let sign = s_a * sign_of_single(&det.beta, r, s);
                    let val = sign * store.get_w(p, q, r, s);
                    if val.abs() > drop_tol {
                        h_row.push((j as u32, val));
                    }
                }
            }
        }
    }

    RowOutput { h: h_row, d: d_row, cap }
}

#[inline]
fn sign_of_single(set: &OrbSet, p: usize, q: usize) -> f64 {
    if set.count_between(p, q) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn excited_index(
    space: &DeterminantSpace,
    det: &Determinant,
    spin: Spin,
    p: usize,
    q: usize,
) -> Option<(usize, f64)> {
    let mut d = det.clone();
    let set = match spin {
        Spin::Alpha => &mut d.alpha,
        Spin::Beta => &mut d.beta,
    };
    let sign = sign_of_single(set, p, q);
    set.clear(p);
    set.set(q);
    space.index_of(&d).map(|j| (j, sign))
}

fn double_excited_index_same(
    space: &DeterminantSpace,
    det: &Determinant,
    spin: Spin,
    p1: usize,
    p2: usize,
    q1: usize,
    q2: usize,
) -> Option<(usize, f64)> {
    let mut d = det.clone();
    let set = match spin {
        Spin::Alpha => &mut d.alpha,
        Spin::Beta => &mut d.beta,
    };
    let s1 = sign_of_single(set, p1, q1);
    set.clear(p1);
    set.set(q1);
    let s2 = sign_of_single(set, p2, q2);
    set.clear(p2);
    set.set(q2);
    space.index_of(&d).map(|j| (j, s1 * s2))
}

#[inline]
fn spin_offset(spin: Spin) -> usize {
    match spin {
        Spin::Alpha => 0,
        Spin::Beta => 1,
    }
}

fn single_feasible(
    space: &DeterminantSpace,
    profile: &[u8],
    p: usize,
    q: usize,
    spin: Spin,
) -> bool {
    let off = spin_offset(spin);
    let sp = space.subspace_of(2 * p + off);
    let sq = space.subspace_of(2 * q + off);
    if sp == sq {
        return true;
    }
    let mut prof: Vec<u8> = profile.to_vec();
    prof[sp] -= 1;
    prof[sq] += 1;
    space.profile_allowed(&prof)
}

fn double_feasible_same(
    space: &DeterminantSpace,
    profile: &[u8],
    p1: usize,
    p2: usize,
    q1: usize,
    q2: usize,
    spin: Spin,
) -> bool {
    let off = spin_offset(spin);
    let mut prof: Vec<u8> = profile.to_vec();
    prof[space.subspace_of(2 * p1 + off)] -= 1;
    prof[space.subspace_of(2 * p2 + off)] -= 1;
    prof[space.subspace_of(2 * q1 + off)] += 1;
    prof[space.subspace_of(2 * q2 + off)] += 1;
    space.profile_allowed(&prof)
}

fn double_feasible_opposite(
    space: &DeterminantSpace,
    profile: &[u8],
    p: usize,
    q: usize,
    r: usize,
    s: usize,
) -> bool {
    let mut prof: Vec<u8> = profile.to_vec();
    prof[space.subspace_of(2 * p)] -= 1;
    prof[space.subspace_of(2 * q)] += 1;
    prof[space.subspace_of(2 * r + 1)] -= 1;
    prof[space.subspace_of(2 * s + 1)] += 1;
    space.profile_allowed(&prof)
}
