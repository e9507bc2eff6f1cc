//! Rotated single-particle orbitals for the central region.
//!
//! Three constructions are provided, all expanded over the central FE-DVR
//! functions and all vanishing at `±x_c` by construction:
//!
//! * `p1`: eigenfunctions of the interaction-free operator `t + v` on the
//!   orthogonal complement of the occupied HF span,
//! * `p2`: as `p1` but with the Hartree potential of the `N_el - 2` system
//!   added to the defining operator (identical to `p1` for two electrons),
//! * natural orbitals: eigenvectors of the spin-summed one-particle density
//!   matrix of a correlated central-region ground state.
//!
//! The occupied-orbital "orthonormalization" is implemented by projecting
//! the defining operator onto the complement of the occupied span and
//! diagonalizing there, which yields energy-ordered orthonormal virtuals
//! without any Gram-Schmidt order dependence.

use crate::fedvr::FedvrGrid;
use crate::model::PotentialSpec;
use crate::scf::HfResult;
use crate::{Error, Result};
use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbitalKind {
    P1,
    P2,
    Natural,
    HfCanonical,
}

/// Orthogonal rotation of the central basis functions into orbitals.
///
/// Column `α` of `b_central` expands rotated orbital `α` over the central
/// grid functions; the implied full-basis transform is the identity on the
/// outer functions (including the bridges at `±x_c`).
#[derive(Debug, Clone)]
pub struct RotationMatrix {
    pub kind: OrbitalKind,
    pub b_central: DMatrix<f64>,
    /// Pseudo-energy (p1/p2, hf) or natural occupation per central orbital.
    pub orbital_values: Vec<f64>,
}

impl RotationMatrix {
    pub fn n_central(&self) -> usize {
        self.b_central.ncols()
    }

    /// Identity rotation (useful as a reference: transformed integrals must
    /// then equal the raw FE-DVR ones).
    pub fn identity(n_c: usize) -> Self {
        RotationMatrix {
            kind: OrbitalKind::HfCanonical,
            b_central: DMatrix::identity(n_c, n_c),
            orbital_values: vec![0.0; n_c],
        }
    }

    /// Max deviation of `b^T b` from the identity.
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.n_central();
        let s = self.b_central.transpose() * &self.b_central;
        (s - DMatrix::identity(n, n)).amax()
    }
}

/// Validate a central block and wrap it as a rotation for a grid with
/// `n_central` functions inside `(-x_c, x_c)`.
pub fn assemble_rotation(
    kind: OrbitalKind,
    b_central: DMatrix<f64>,
    orbital_values: Vec<f64>,
    n_central: usize,
) -> Result<RotationMatrix> {
    if b_central.nrows() != b_central.ncols() {
        return Err(Error::Dimension(format!(
            "central rotation block must be square, got {}x{}",
            b_central.nrows(),
            b_central.ncols()
        )));
    }
    if b_central.nrows() != n_central {
        return Err(Error::Dimension(format!(
            "central block of size {} does not match N_c = {}",
            b_central.nrows(),
            n_central
        )));
    }
    let rot = RotationMatrix { kind, b_central, orbital_values };
    let defect = rot.orthogonality_defect();
    if defect > 1e-12 {
        return Err(Error::Invalid(format!(
            "central rotation block not orthogonal (defect {defect:.3e})"
        )));
    }
    Ok(rot)
}

/// Pseudo orbitals from the interaction-free operator `t + v`.
pub fn build_p1(
    central_grid: &FedvrGrid,
    potential: &PotentialSpec,
    hf: &HfResult,
) -> Result<RotationMatrix> {
    let a = one_body_operator(central_grid, potential, None)?;
    pseudo_from_operator(OrbitalKind::P1, a, central_grid, hf)
}

/// Improved pseudo orbitals from `t + v + v_H^{N_el-2}`.
pub fn build_p2(
    central_grid: &FedvrGrid,
    potential: &PotentialSpec,
    hf: &HfResult,
    v_hartree_minus2: &nalgebra::DVector<f64>,
) -> Result<RotationMatrix> {
    if v_hartree_minus2.len() != central_grid.n_b() {
        return Err(Error::Dimension(format!(
            "Hartree potential has {} nodes, central grid has {}",
            v_hartree_minus2.len(),
            central_grid.n_b()
        )));
    }
    let a = one_body_operator(central_grid, potential, Some(v_hartree_minus2))?;
    pseudo_from_operator(OrbitalKind::P2, a, central_grid, hf)
}

/// Natural orbitals from a spin-summed central one-particle density matrix
/// expressed over the central grid functions. Ordered by descending
/// occupation.
pub fn build_natural(
    rho_central: &DMatrix<f64>,
    n_el: usize,
    central_grid: &FedvrGrid,
) -> Result<RotationMatrix> {
    let n = central_grid.n_b();
    if rho_central.nrows() != n || rho_central.ncols() != n {
        return Err(Error::Dimension(format!(
            "density matrix is {}x{}, expected {n}x{n}",
            rho_central.nrows(),
            rho_central.ncols()
        )));
    }
    let herm_defect = (rho_central - rho_central.transpose()).amax();
    if herm_defect > 1e-10 {
        return Err(Error::Invalid(format!(
            "density matrix not symmetric (defect {herm_defect:.3e}); upstream state is broken"
        )));
    }
    let sym = 0.5 * (rho_central + rho_central.transpose());
    let trace = sym.trace();
    if (trace - n_el as f64).abs() > 1e-8 * n_el as f64 {
        return Err(Error::Invalid(format!(
            "density matrix trace {trace} does not match {n_el} electrons"
        )));
    }
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let mut b = DMatrix::zeros(n, n);
    let mut occ = Vec::with_capacity(n);
    for (col, &j) in order.iter().enumerate() {
        b.set_column(col, &eig.eigenvectors.column(j));
        occ.push(eig.eigenvalues[j]);
    }
    reorthogonalize(&mut b);
    fix_signs(&mut b);
    Ok(RotationMatrix { kind: OrbitalKind::Natural, b_central: b, orbital_values: occ })
}

/// All canonical HF orbitals as the rotation (occupied and HF virtuals).
pub fn hf_canonical(hf: &HfResult, central_grid: &FedvrGrid) -> Result<RotationMatrix> {
    if hf.orbital_coefficients.nrows() != central_grid.n_b() {
        return Err(Error::Dimension("HF result does not match the central grid".into()));
    }
    let mut b = hf.orbital_coefficients.clone();
    reorthogonalize(&mut b);
    fix_signs(&mut b);
    Ok(RotationMatrix {
        kind: OrbitalKind::HfCanonical,
        b_central: b,
        orbital_values: hf.orbital_energies.iter().cloned().collect(),
    })
}

fn one_body_operator(
    grid: &FedvrGrid,
    potential: &PotentialSpec,
    extra_diag: Option<&nalgebra::DVector<f64>>,
) -> Result<DMatrix<f64>> {
    let mut a = grid.kinetic_matrix();
    let v = grid.diagonal_potential(|x| potential.value(x))?;
    for p in 0..grid.n_b() {
        a[(p, p)] += v[p];
        if let Some(extra) = extra_diag {
            a[(p, p)] += extra[p];
        }
    }
    Ok(a)
}

fn pseudo_from_operator(
    kind: OrbitalKind,
    a: DMatrix<f64>,
    central_grid: &FedvrGrid,
    hf: &HfResult,
) -> Result<RotationMatrix> {
    let n = central_grid.n_b();
    if hf.orbital_coefficients.nrows() != n {
        return Err(Error::Dimension(
            "HF orbitals must come from the same central-region grid".into(),
        ));
    }
    let n_occ = hf.n_occupied();
    let occ = hf.occupied();

    // orthonormal basis of the occupied-span complement from the projector
    let mut q = DMatrix::identity(n, n);
    for i in 0..n_occ {
        let c = occ.column(i);
        q.ger(-1.0, &c, &c, 1.0);
    }
    let qe = q.symmetric_eigen();
    let keep: Vec<usize> = (0..n).filter(|&j| qe.eigenvalues[j] > 0.5).collect();
    if keep.len() != n - n_occ {
        return Err(Error::Invalid(format!(
            "occupied projector has rank {} instead of {}",
            n - keep.len(),
            n_occ
        )));
    }
    let mut u = DMatrix::zeros(n, keep.len());
    for (col, &j) in keep.iter().enumerate() {
        u.set_column(col, &qe.eigenvectors.column(j));
    }

    let a_red = u.transpose() * &a * &u;
    let eig = a_red.symmetric_eigen();
    let m = keep.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let virtuals = &u * &eig.eigenvectors;

    let mut b = DMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for i in 0..n_occ {
        b.set_column(i, &occ.column(i));
        values.push(hf.orbital_energies[i]);
    }
    for (col, &j) in order.iter().enumerate() {
        b.set_column(n_occ + col, &virtuals.column(j));
        values.push(eig.eigenvalues[j]);
    }
    // degenerate pseudo-energies: break ties by ascending <x>
    let xs: Vec<f64> = central_grid.nodes.clone();
    for w in 0..n.saturating_sub(1) {
        let (i, j) = (n_occ + w, n_occ + w + 1);
        if j < n && (values[j] - values[i]).abs() < 1e-12 {
            let mean_x = |col: usize| -> f64 {
                b.column(col).iter().zip(&xs).map(|(&c, &x)| c * c * x).sum()
            };
            if mean_x(i) > mean_x(j) + 1e-12 {
                b.swap_columns(i, j);
                values.swap(i, j);
            }
        }
    }
    reorthogonalize(&mut b);
    fix_signs(&mut b);
    assemble_rotation(kind, b, values, central_grid.n_b())
}

/// Polish a nearly orthogonal block to machine precision with the Newton
/// iteration `X <- X (3I - X^T X) / 2`, which preserves the span and
/// perturbs columns only at the scale of the existing defect.
fn reorthogonalize(b: &mut DMatrix<f64>) {
    let n = b.ncols();
    for _ in 0..4 {
        let s = b.transpose() * &*b;
        let defect = (&s - DMatrix::identity(n, n)).amax();
        if defect < 1e-14 {
            break;
        }
        let correction = DMatrix::identity(n, n) * 3.0 - s;
        *b = &*b * correction * 0.5;
    }
}

/// Scale each column so its largest-magnitude coefficient is positive.
fn fix_signs(b: &mut DMatrix<f64>) {
    for mut col in b.column_iter_mut() {
        let mut best = 0usize;
        let mut best_abs = 0.0;
        for (i, &v) in col.iter().enumerate() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.neg_mut();
        }
    }
}
