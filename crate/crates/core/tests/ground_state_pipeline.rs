//! End-to-end ground-state energies on the production helium grid
//! (box ±15, central region ±10, 30 elements × 8 DVR functions).

use gasci::ci::{assemble, AssembleOptions};
use gasci::fedvr::build_grid;
use gasci::gas::{enumerate, GasSpec};
use gasci::integrals::IntegralStore;
use gasci::model::{EeInteraction, PotentialSpec};
use gasci::orbitals::build_p1;
use gasci::propagate::{itp_ground_state, PropagatorConfig};
use gasci::scf::{solve_hf, ScfOptions};

fn itp_cfg() -> PropagatorConfig {
    PropagatorConfig { dtau: 20.0, itp_tol: 1e-11, max_itp_steps: 5000, ..Default::default() }
}

#[test]
fn he_fci_unrotated_ground_state() {
    let grid = build_grid(15.0, 10.0, 30, 8).unwrap();
    let pot = PotentialSpec::atom(2.0);
    let ee = EeInteraction::default();
    let store = IntegralStore::build(&grid, &pot, &ee, None, None, None).unwrap();
    let space = enumerate(&GasSpec::fci(2, 0), grid.n_b(), 100_000_000).unwrap();
    assert_eq!(space.len(), 43681);
    let h = assemble(&space, &store, 0.0, &AssembleOptions::default()).unwrap();
    let (e0, _) = itp_ground_state(&h, &itp_cfg(), None).unwrap();
    assert!(
        (e0 - (-2.23825782)).abs() < 1e-6,
        "FCI ground state {e0:.8} vs reference -2.23825782"
    );
}

#[test]
fn he_cas_star_rotated_ground_states() {
    let grid = build_grid(15.0, 10.0, 30, 8).unwrap();
    let sub = grid.central_subgrid().unwrap();
    let pot = PotentialSpec::atom(2.0);
    let ee = EeInteraction::default();
    let hf = solve_hf(&sub, &pot, &ee, 2, &ScfOptions::default()).unwrap();
    let rot = build_p1(&sub, &pot, &hf).unwrap();
    let store = IntegralStore::build(&grid, &pot, &ee, Some(&rot), None, None).unwrap();

    for (k, n_expect, e_expect, tol) in [
        (2usize, 832usize, -2.23617624, 1e-6),
        (27, 10557, -2.23825772, 1e-6),
    ] {
        let spec = GasSpec::cas_star(2, 0, k, grid.n_b()).unwrap();
        let space = enumerate(&spec, grid.n_b(), 100_000_000).unwrap();
        assert_eq!(space.len(), n_expect);
        let h = assemble(&space, &store, 0.0, &AssembleOptions::default()).unwrap();
        let (e0, _) = itp_ground_state(&h, &itp_cfg(), None).unwrap();
        assert!(
            (e0 - e_expect).abs() < tol,
            "CAS*(2,{k}) ground state {e0:.8} vs reference {e_expect}"
        );
    }
}
