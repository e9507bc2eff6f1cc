//! Time-dependent generalized-active-space configuration interaction (TD-GASCI)
//! for one-dimensional soft-Coulomb atoms and diatomic molecules in strong
//! laser fields.
//!
//! The single-particle basis is a finite-element discrete-variable
//! representation (FE-DVR) whose functions inside a central region
//! `(-x_c, x_c)` are rotated into Hartree-Fock, pseudo, or natural orbitals
//! while the outer grid stays untouched. On top of that basis, determinant
//! spaces are restricted by generalized-active-space (GAS) occupation
//! patterns, the sparse CI matrices are assembled with Slater-Condon rules,
//! and the coefficient vector is propagated in imaginary time (ground state)
//! or real time (pulse dynamics) with short-iterative Krylov exponentials.
//!
//! Pipeline for a typical run:
//!
//! 1. [`fedvr::build_grid`] and the central subgrid,
//! 2. [`scf::solve_hf`] for reference orbitals,
//! 3. [`orbitals`] for the central rotation matrix,
//! 4. [`integrals::IntegralStore::build`] for transformed matrix elements,
//! 5. [`gas`] for the determinant space,
//! 6. [`ci::assemble`] for the sparse Hamiltonian,
//! 7. [`propagate`] for ITP and real-time evolution,
//! 8. [`observables`] for densities, spectra and yields.

pub mod ci;
mod error;
pub mod gas;
pub mod integrals;
pub mod observables;
pub mod orbitals;
pub mod propagate;
pub mod fedvr;
pub mod model;
pub mod scf;

pub use error::{Error, Result};
