//! Transformation and storage of one- and two-electron integrals in the
//! partially rotated basis.
//!
//! Orbital indexing puts the `N_c` rotated central orbitals first, followed
//! by the untouched outer grid functions in spatial order. Because the raw
//! FE-DVR interaction is node-diagonal, `w_ijkl = w(x_i, x_k) δ_ij δ_kl`,
//! a pair of transformed indices is nonzero only if both lie in the central
//! block or both are equal outer functions. The full four-index tensor then
//! collapses to exactly two stored arrays:
//!
//! * `w_central`: all-central block `(αβ|γδ)`, compressed by the 8-fold
//!   permutational symmetry of real orbitals,
//! * `w_mixed`: outer index × central pair, `(γγ|αβ) = Σ_k w(x_γ, x_k) b_kα b_kβ`,
//!
//! while outer-outer values fall back to the raw node table. Transformed
//! one-electron matrices (kinetic + nuclear, dipole) are kept dense; the
//! absorbing potential stays diagonal because its support lies outside the
//! rotated region.

use crate::fedvr::FedvrGrid;
use crate::model::{cap_value, EeInteraction, PotentialSpec};
use crate::orbitals::RotationMatrix;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

#[inline]
fn tri(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Canonical pair index with p >= q folding.
#[inline]
fn pair_index(p: usize, q: usize) -> usize {
    if p >= q {
        tri(p) + q
    } else {
        tri(q) + p
    }
}

/// Number of unique central two-electron values for a given `N_c`.
pub fn w_central_len(n_c: usize) -> usize {
    tri(tri(n_c))
}

/// Transformed integrals over the mixed orbital basis.
#[derive(Debug, Clone)]
pub struct IntegralStore {
    n_b: usize,
    n_c: usize,
    /// Grid index of the first central function (orbital ordering maps
    /// outer orbital `N_c + j` to the j-th non-central grid function).
    central_start: usize,
    /// One-electron matrix (kinetic + nuclear potential), orbital indexing.
    pub h: DMatrix<f64>,
    /// Dipole matrix, same structure.
    pub d: DMatrix<f64>,
    /// Absorbing-potential diagonal per orbital (zero on central orbitals).
    pub cap_diag: DVector<f64>,
    w_central: Vec<f64>,
    w_mixed: Vec<f64>,
    /// Raw node-pair interaction between outer functions.
    w_outer: DMatrix<f64>,
    /// Node coordinate and quadrature weight of each outer orbital.
    pub outer_nodes: Vec<f64>,
    pub outer_weights: Vec<f64>,
    pub x_c: f64,
    pub x_s: f64,
}

impl IntegralStore {
    /// Build the store for a grid, model, and optional central rotation
    /// (`None` keeps the raw FE-DVR basis, i.e. every function is "outer").
    pub fn build(
        grid: &FedvrGrid,
        potential: &PotentialSpec,
        ee: &EeInteraction,
        rotation: Option<&RotationMatrix>,
        r_cap: Option<f64>,
        memory_budget: Option<u64>,
    ) -> Result<Self> {
        let n_b = grid.n_b();
        // a rotation spanning the whole grid is allowed (fully rotated basis,
        // used for correlated central-region reference calculations)
        let n_c = match rotation {
            Some(rot) => {
                if rot.n_central() != grid.n_c() && rot.n_central() != n_b {
                    return Err(Error::Dimension(format!(
                        "rotation block of {} orbitals matches neither N_c = {} nor N_b = {n_b}",
                        rot.n_central(),
                        grid.n_c()
                    )));
                }
                rot.n_central()
            }
            None => 0,
        };
        let n_f = n_b - n_c;
        let m_pairs = tri(n_c);

        let required = 8u64
            * (w_central_len(n_c) as u64
                + (n_f * m_pairs) as u64
                + (n_f * n_f) as u64
                + 2 * (n_b * n_b) as u64);
        let budget = memory_budget.unwrap_or(u64::MAX);
        if required > budget {
            return Err(Error::MemoryBudget { required, budget });
        }
        if let Some(rc) = r_cap {
            if rc < grid.x_c {
                return Err(Error::Invalid(format!(
                    "r_cap = {rc} inside the rotated region (x_c = {}) would break the \
                     one-electron diagonality of the absorbing potential",
                    grid.x_c
                )));
            }
        }

        // permutation: orbital-order pre-rotation = central functions first
        let central = grid.central_range();
        let c0 = if n_c > 0 && n_c < n_b { central.start } else { 0 };
        let grid_of_orbital: Vec<usize> = (c0..c0 + n_c)
            .chain((0..n_b).filter(|p| !(c0..c0 + n_c).contains(p)))
            .collect();

        let raw_t = grid.kinetic_matrix();
        let v = grid.diagonal_potential(|x| potential.value(x))?;
        let mut raw_h = raw_t;
        for p in 0..n_b {
            raw_h[(p, p)] += v[p];
        }

        let permuted = |raw: &DMatrix<f64>| -> DMatrix<f64> {
            DMatrix::from_fn(n_b, n_b, |i, j| raw[(grid_of_orbital[i], grid_of_orbital[j])])
        };
        let h_perm = permuted(&raw_h);
        let mut d_perm = DMatrix::zeros(n_b, n_b);
        for i in 0..n_b {
            d_perm[(i, i)] = grid.nodes[grid_of_orbital[i]];
        }

        let (h, d) = match rotation {
            Some(rot) => (
                transform_one_electron(&h_perm, rot),
                transform_one_electron(&d_perm, rot),
            ),
            None => (h_perm, d_perm),
        };

        // node-pair interaction, orbital-permuted
        let w_nodes = DMatrix::from_fn(n_b, n_b, |i, j| {
            ee.value(grid.nodes[grid_of_orbital[i]], grid.nodes[grid_of_orbital[j]])
        });
        let (w_central, w_mixed) = match rotation {
            Some(rot) => transform_two_electron(&w_nodes, rot),
            None => (Vec::new(), Vec::new()),
        };
        let w_outer = DMatrix::from_fn(n_f, n_f, |a, b| w_nodes[(n_c + a, n_c + b)]);

        let outer_nodes: Vec<f64> =
            (n_c..n_b).map(|a| grid.nodes[grid_of_orbital[a]]).collect();
        let outer_weights: Vec<f64> =
            (n_c..n_b).map(|a| grid.weights[grid_of_orbital[a]]).collect();
        let cap_diag = DVector::from_fn(n_b, |a, _| match r_cap {
            Some(rc) if a >= n_c => cap_value(outer_nodes[a - n_c], rc, grid.x_s),
            _ => 0.0,
        });

        Ok(IntegralStore {
            n_b,
            n_c,
            central_start: c0,
            h,
            d,
            cap_diag,
            w_central,
            w_mixed,
            w_outer,
            outer_nodes,
            outer_weights,
            x_c: grid.x_c,
            x_s: grid.x_s,
        })
    }

    pub fn n_orbitals(&self) -> usize {
        self.n_b
    }

    pub fn n_central(&self) -> usize {
        self.n_c
    }

    pub fn n_outer(&self) -> usize {
        self.n_b - self.n_c
    }

    #[inline]
    pub fn is_central(&self, orbital: usize) -> bool {
        orbital < self.n_c
    }

    /// Grid-function index of an orbital (`None` for rotated central ones).
    pub fn grid_index(&self, orbital: usize) -> Option<usize> {
        if orbital < self.n_c {
            None
        } else {
            let j = orbital - self.n_c;
            Some(if j < self.central_start { j } else { j + self.n_c })
        }
    }

    /// Two-electron integral `(αβ|γδ)` in chemist notation.
    #[inline]
    pub fn get_w(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let nc = self.n_c;
        match (a < nc, b < nc, c < nc, d < nc) {
            (true, true, true, true) => {
                self.w_central[pair_index(pair_index(a, b), pair_index(c, d))]
            }
            (true, true, false, false) => {
                if c == d {
                    self.w_mixed[(c - nc) * tri(nc) + pair_index(a, b)]
                } else {
                    0.0
                }
            }
            (false, false, true, true) => {
                if a == b {
                    self.w_mixed[(a - nc) * tri(nc) + pair_index(c, d)]
                } else {
                    0.0
                }
            }
            (false, false, false, false) => {
                if a == b && c == d {
                    self.w_outer[(a - nc, c - nc)]
                } else {
                    0.0
                }
            }
            // a pair straddling the central/outer boundary is structurally zero
            _ => 0.0,
        }
    }

    /// Coulomb integral `(pp|qq)`.
    #[inline]
    pub fn coulomb(&self, p: usize, q: usize) -> f64 {
        self.get_w(p, p, q, q)
    }

    /// Exchange integral `(pq|qp)`.
    #[inline]
    pub fn exchange(&self, p: usize, q: usize) -> f64 {
        self.get_w(p, q, q, p)
    }

    /// For each orbital, the sorted orbitals coupled through the one-electron
    /// matrices or the central two-electron block (the single-excitation
    /// sparsity pattern).
    pub fn one_electron_adjacency(&self, tol: f64) -> Vec<Vec<u32>> {
        let n = self.n_b;
        (0..n)
            .map(|p| {
                let mut row: Vec<u32> = (0..n)
                    .filter(|&q| {
                        q != p
                            && (self.h[(p, q)].abs() > tol
                                || self.d[(p, q)].abs() > tol
                                || (p < self.n_c && q < self.n_c))
                    })
                    .map(|q| q as u32)
                    .collect();
                row.sort_unstable();
                row
            })
            .collect()
    }

    pub fn memory_bytes(&self) -> u64 {
        8 * (self.w_central.len() + self.w_mixed.len() + self.w_outer.len()) as u64
            + 16 * (self.n_b * self.n_b) as u64
    }

    pub fn has_cap(&self) -> bool {
        self.cap_diag.iter().any(|&c| c != 0.0)
    }

    /// Serialize to the documented little-endian cache layout: the magic
    /// `GASW1\0`, `u32` dims (n_b, n_c, central_start), `f64` box parameters,
    /// then the packed arrays in order (h, d, cap_diag, w_central, w_mixed,
    /// w_outer, outer_nodes, outer_weights), each prefixed by its `u64`
    /// element count.
    pub fn write_binary<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(b"GASW1\0")?;
        for v in [self.n_b as u32, self.n_c as u32, self.central_start as u32] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in [self.x_c, self.x_s] {
            w.write_all(&v.to_le_bytes())?;
        }
        let write_slice = |w: &mut W, s: &[f64]| -> std::io::Result<()> {
            w.write_all(&(s.len() as u64).to_le_bytes())?;
            for &v in s {
                w.write_all(&v.to_le_bytes())?;
            }
            Ok(())
        };
        write_slice(&mut w, self.h.as_slice())?;
        write_slice(&mut w, self.d.as_slice())?;
        write_slice(&mut w, self.cap_diag.as_slice())?;
        write_slice(&mut w, &self.w_central)?;
        write_slice(&mut w, &self.w_mixed)?;
        write_slice(&mut w, self.w_outer.as_slice())?;
        write_slice(&mut w, &self.outer_nodes)?;
        write_slice(&mut w, &self.outer_weights)?;
        Ok(())
    }

    /// Deserialize from the cache layout written by [`IntegralStore::write_binary`].
    pub fn read_binary<R: std::io::Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 6];
        r.read_exact(&mut magic)?;
        if &magic != b"GASW1\0" {
            return Err(Error::Invalid("not an integral cache file".into()));
        }
        let mut u32buf = [0u8; 4];
        let mut read_u32 = |r: &mut R| -> Result<u32> {
            r.read_exact(&mut u32buf)?;
            Ok(u32::from_le_bytes(u32buf))
        };
        let n_b = read_u32(&mut r)? as usize;
        let n_c = read_u32(&mut r)? as usize;
        let central_start = read_u32(&mut r)? as usize;
        let mut f64buf = [0u8; 8];
        let mut read_f64 = |r: &mut R| -> Result<f64> {
            r.read_exact(&mut f64buf)?;
            Ok(f64::from_le_bytes(f64buf))
        };
        let x_c = read_f64(&mut r)?;
        let x_s = read_f64(&mut r)?;
        let read_vec = |r: &mut R| -> Result<Vec<f64>> {
            let mut lenbuf = [0u8; 8];
            r.read_exact(&mut lenbuf)?;
            let len = u64::from_le_bytes(lenbuf) as usize;
            let mut out = vec![0.0f64; len];
            let mut buf = [0u8; 8];
            for v in &mut out {
                r.read_exact(&mut buf)?;
                *v = f64::from_le_bytes(buf);
            }
            Ok(out)
        };
        let h = read_vec(&mut r)?;
        let d = read_vec(&mut r)?;
        let cap = read_vec(&mut r)?;
        let w_central = read_vec(&mut r)?;
        let w_mixed = read_vec(&mut r)?;
        let w_outer = read_vec(&mut r)?;
        let outer_nodes = read_vec(&mut r)?;
        let outer_weights = read_vec(&mut r)?;
        let n_f = n_b - n_c;
        if h.len() != n_b * n_b || w_outer.len() != n_f * n_f || cap.len() != n_b {
            return Err(Error::Invalid("integral cache has inconsistent dimensions".into()));
        }
        Ok(IntegralStore {
            n_b,
            n_c,
            central_start,
            h: DMatrix::from_vec(n_b, n_b, h),
            d: DMatrix::from_vec(n_b, n_b, d),
            cap_diag: DVector::from_vec(cap),
            w_central,
            w_mixed,
            w_outer: DMatrix::from_vec(n_f, n_f, w_outer),
            outer_nodes,
            outer_weights,
            x_c,
            x_s,
        })
    }
}

/// Content hash over everything that determines a transformed integral set:
/// grid partition, model parameters, rotation coefficients, and CAP onset.
pub fn content_key(
    grid: &FedvrGrid,
    potential: &PotentialSpec,
    ee: &EeInteraction,
    rotation: Option<&RotationMatrix>,
    r_cap: Option<f64>,
) -> u64 {
    struct Fnv(u64);
    impl Fnv {
        fn bytes(&mut self, bytes: &[u8]) {
            for &b in bytes {
                self.0 ^= b as u64;
                self.0 = self.0.wrapping_mul(0x100000001b3);
            }
        }
        fn f64(&mut self, x: f64) {
            self.bytes(&x.to_bits().to_le_bytes());
        }
    }
    let mut h = Fnv(0xcbf29ce484222325);
    for &b in &grid.element_boundaries {
        h.f64(b);
    }
    h.f64(grid.x_c);
    h.f64(grid.n_g as f64);
    match *potential {
        PotentialSpec::Atom { z, s } => {
            h.f64(1.0);
            h.f64(z);
            h.f64(s);
        }
        PotentialSpec::Diatomic { z1, z2, r, s } => {
            h.f64(2.0);
            h.f64(z1);
            h.f64(z2);
            h.f64(r);
            h.f64(s);
        }
    }
    h.f64(ee.s);
    match rotation {
        Some(rot) => {
            h.f64(rot.n_central() as f64);
            for v in rot.b_central.iter() {
                h.f64(*v);
            }
        }
        None => h.bytes(b"raw"),
    }
    h.f64(r_cap.unwrap_or(f64::NAN));
    h.0
}

/// One-electron transform `h_αβ = Σ_ij b_αi h_ij b_βj` exploiting the block
/// form of the rotation: dense on the central block, a half transform on the
/// central-outer coupling, untouched outside.
pub fn transform_one_electron(h_perm: &DMatrix<f64>, rot: &RotationMatrix) -> DMatrix<f64> {
    let n = h_perm.nrows();
    let nc = rot.n_central();
    let b = &rot.b_central;
    let mut out = h_perm.clone();
    if nc == 0 {
        return out;
    }
    let h_cc = h_perm.view((0, 0), (nc, nc));
    let h_co = h_perm.view((0, nc), (nc, n - nc));
    let cc = b.transpose() * h_cc * b;
    let co = b.transpose() * h_co;
    out.view_mut((0, 0), (nc, nc)).copy_from(&cc);
    out.view_mut((0, nc), (nc, n - nc)).copy_from(&co);
    out.view_mut((nc, 0), (n - nc, nc)).copy_from(&co.transpose());
    out
}

/// Two-electron transform from the node-diagonal interaction to the packed
/// central block and the mixed outer×central array.
///
/// `w_nodes` is the permuted node-pair table (central functions first).
/// Returns `(w_central, w_mixed)` with `w_central` compressed by the 8-fold
/// permutational symmetry and `w_mixed[(a, pair)] = Σ_k w(x_a, x_k) b_kγ b_kδ`.
pub fn transform_two_electron(
    w_nodes: &DMatrix<f64>,
    rot: &RotationMatrix,
) -> (Vec<f64>, Vec<f64>) {
    let nc = rot.n_central();
    let n = w_nodes.nrows();
    let n_f = n - nc;
    let m = tri(nc);
    let b = &rot.b_central;

    // V[:, pair(γδ)] = b_:γ ∘ b_:δ over the central nodes
    let mut v = DMatrix::zeros(nc, m);
    for g in 0..nc {
        for dl in 0..=g {
            let col = pair_index(g, dl);
            for k in 0..nc {
                v[(k, col)] = b[(k, g)] * b[(k, dl)];
            }
        }
    }
    let w_cc = w_nodes.view((0, 0), (nc, nc));
    let u = w_cc * &v; // nc × m

    // packed G[P][R] = V_P · U_R for R <= P, blocked over P
    let mut w_central = vec![0.0f64; w_central_len(nc)];
    let block = 256;
    let blocks: Vec<(usize, usize)> =
        (0..m).step_by(block).map(|p0| (p0, (p0 + block).min(m))).collect();
    // disjoint output ranges per block keep the parallel fill deterministic
    let mut slices: Vec<&mut [f64]> = Vec::with_capacity(blocks.len());
    {
        let mut rest: &mut [f64] = &mut w_central;
        let mut offset = 0usize;
        for &(_, p1) in &blocks {
            let end = tri(p1);
            let (head, tail) = rest.split_at_mut(end - offset);
            slices.push(head);
            rest = tail;
            offset = end;
        }
    }
    blocks
        .par_iter()
        .zip(slices.par_iter_mut())
        .for_each(|(&(p0, p1), out)| {
            let vt_block = v.columns(p0, p1 - p0).transpose(); // (p1-p0) × nc
            let g_block = vt_block * &u; // (p1-p0) × m
            let base = tri(p0);
            for p in p0..p1 {
                for r in 0..=p {
                    out[tri(p) + r - base] = g_block[(p - p0, r)];
                }
            }
        });

    // mixed block: rows of the outer×central node table times V
    let mut w_mixed = vec![0.0f64; n_f * m];
    let w_oc = w_nodes.view((nc, 0), (n_f, nc));
    w_mixed
        .par_chunks_mut(m)
        .enumerate()
        .for_each(|(a, row)| {
            let wa = w_oc.row(a);
            for col in 0..m {
                let mut acc = 0.0;
                for k in 0..nc {
                    acc += wa[k] * v[(k, col)];
                }
                row[col] = acc;
            }
        });

    (w_central, w_mixed)
}
