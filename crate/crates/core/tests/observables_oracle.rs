//! Density-matrix extraction vs. the operator-string oracle, and the
//! cross-module consistency between RDM occupations and natural orbitals.

mod common;

use gasci::ci::{assemble, AssembleOptions, CiState};
use gasci::fedvr::build_grid;
use gasci::gas::{enumerate, GasSpec};
use gasci::integrals::IntegralStore;
use gasci::model::{EeInteraction, PotentialSpec};
use gasci::observables::{rdm, rdm_to_grid};
use gasci::orbitals::build_natural;
use gasci::propagate::{itp_ground_state, PropagatorConfig};
use gasci::scf::{solve_hf, ScfOptions};
use num_complex::Complex64;

#[test]
fn rdm_matches_operator_strings_on_tiny_space() {
    let grid = build_grid(5.0, 3.0, 5, 3).unwrap();
    let pot = PotentialSpec::atom(4.0);
    let ee = EeInteraction::default();
    let sub = grid.central_subgrid().unwrap();
    let hf = solve_hf(&sub, &pot, &ee, 4, &ScfOptions::default()).unwrap();
    let rot = gasci::orbitals::build_p1(&sub, &pot, &hf).unwrap();
    let store = IntegralStore::build(&grid, &pot, &ee, Some(&rot), None, None).unwrap();
    let spec = GasSpec::cas_star(4, 1, 2, grid.n_b()).unwrap();
    let space = enumerate(&spec, grid.n_b(), 1_000_000).unwrap();

    // a deterministic mixed state
    let n = space.len();
    let mut state = CiState::basis_state(n, 0);
    let mut s = 0x51ed_2705_31fc_9b44u64;
    for c in &mut state.coefficients {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        *c = Complex64::new((s >> 11) as f64 / (1u64 << 53) as f64 - 0.5, 0.0);
    }
    state.normalize();

    let r = rdm(&space, &state);
    let n_orb = space.n_spatial;
    for p in 0..n_orb {
        for q in 0..n_orb {
            let mut expect = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let ov = common::oracle_rdm_overlap(space.det(i), space.det(j), p, q);
                    if ov != 0.0 {
                        expect +=
                            (state.coefficients[i].conj() * state.coefficients[j]).re * ov;
                    }
                }
            }
            assert!(
                (r.rho[(p, q)].re - expect).abs() < 1e-12,
                "rho[{p},{q}] = {} vs oracle {expect}",
                r.rho[(p, q)].re
            );
        }
    }
}

#[test]
fn natural_occupations_consistent_between_modules() {
    // central-only correlated ground state of a small helium model
    let grid = build_grid(6.0, 4.0, 6, 4).unwrap();
    let sub = grid.central_subgrid().unwrap();
    let pot = PotentialSpec::atom(2.0);
    let ee = EeInteraction::default();
    let store = IntegralStore::build(&sub, &pot, &ee, None, None, None).unwrap();
    let space = enumerate(&GasSpec::fci(2, 0), sub.n_b(), 1_000_000).unwrap();
    let h = assemble(&space, &store, 0.0, &AssembleOptions::default()).unwrap();
    let cfg = PropagatorConfig { dtau: 10.0, itp_tol: 1e-13, ..Default::default() };
    let (_, c0) = itp_ground_state(&h, &cfg, None).unwrap();

    let r = rdm(&space, &c0);
    let occ_rdm = r.occupations();
    let rho_grid = rdm_to_grid(&r, None, &sub);
    let n = sub.n_b();
    let rho_real = nalgebra::DMatrix::from_fn(n, n, |i, j| rho_grid.rho[(i, j)].re);
    let rot = build_natural(&rho_real, 2, &sub).unwrap();
    for (a, b) in occ_rdm.iter().zip(&rot.orbital_values) {
        assert!((a - b).abs() < 1e-10, "occupation mismatch {a} vs {b}");
    }
    // correlated two-electron ground state: dominant occupation just below 2
    assert!(occ_rdm[0] > 1.9 && occ_rdm[0] < 2.0);
    assert!(occ_rdm[1] > occ_rdm[2]);
    let total: f64 = occ_rdm.iter().sum();
    assert!((total - 2.0).abs() < 1e-10);
}
