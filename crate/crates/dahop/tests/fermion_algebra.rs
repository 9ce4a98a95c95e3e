//! Sign-convention checks of the occupation-basis machinery against the
//! dense Kronecker-product oracle.

mod common;

use std::sync::Arc;

use common::{
    adjoint, c_full, cdag_full, embed_full, filled_full, max_diff, q_full, sector_block, C64,
};
use ndarray::Array2;

use dahop::fockspace::{
    apply_monomial, enumerate_sector, filled_state, vacuum_state, FermiOp, StateVector,
};
use dahop::lattice::{build_chain, sample_couplings, Boundary, CouplingMode, SamplingRanges};
use dahop::operators::build_q_operator;

#[test]
fn single_operators_match_dense_oracle() {
    let n = 4;
    for site in 1..=n {
        let c_mat = c_full(n, site);
        let cdag_mat = cdag_full(n, site);
        for n_particles in 0..=n {
            let basis = enumerate_sector(n, n_particles).unwrap();
            for (idx, &config) in basis.configs().iter().enumerate() {
                let mut state = StateVector::zero(Arc::clone(&basis));
                state.amplitudes[idx] = C64::new(1.0, 0.0);

                let ann = apply_monomial(&[FermiOp::Annihilate(site)], &state).unwrap();
                let oracle = c_mat.dot(&embed_full(&state));
                let got = embed_full(&ann);
                for (a, b) in got.iter().zip(oracle.iter()) {
                    assert!((a - b).norm() < 1e-14, "c_{site} mismatch on {config:b}");
                }

                let cre = apply_monomial(&[FermiOp::Create(site)], &state).unwrap();
                let oracle = cdag_mat.dot(&embed_full(&state));
                let got = embed_full(&cre);
                for (a, b) in got.iter().zip(oracle.iter()) {
                    assert!((a - b).norm() < 1e-14, "c†_{site} mismatch on {config:b}");
                }
            }
        }
    }
}

#[test]
fn four_operator_monomial_returns_minus_vacuum() {
    // c₁ c₂ c₁† c₂† |vac⟩ = −|vac⟩.
    let vac = vacuum_state(2).unwrap();
    let ops = [
        FermiOp::Annihilate(1),
        FermiOp::Annihilate(2),
        FermiOp::Create(1),
        FermiOp::Create(2),
    ];
    let got = apply_monomial(&ops, &vac).unwrap();
    assert!((got.amplitudes[0] - C64::new(-1.0, 0.0)).norm() < 1e-14);

    // Same result through the dense oracle.
    let m = c_full(2, 1)
        .dot(&c_full(2, 2))
        .dot(&cdag_full(2, 1))
        .dot(&cdag_full(2, 2));
    let oracle = m.dot(&common::vac_full(2));
    assert!((oracle[0] - C64::new(-1.0, 0.0)).norm() < 1e-14);
}

#[test]
fn filled_state_matches_operator_product() {
    for n in 1..=5 {
        let filled = filled_state(n).unwrap();
        let oracle = filled_full(n);
        let got = embed_full(&filled);
        for (a, b) in got.iter().zip(oracle.iter()) {
            assert!((a - b).norm() < 1e-14, "filled state sign at n={n}");
        }
    }
}

#[test]
fn canonical_anticommutation_relations_on_random_states() {
    let n = 5;
    let basis = enumerate_sector(n, 2).unwrap();
    for seed in 0..4u64 {
        let psi = common::pseudo_random_state(Arc::clone(&basis), seed);
        for x in 1..=n {
            for y in 1..=n {
                // (c_x c†_y + c†_y c_x)|ψ⟩ = δ_{xy}|ψ⟩.
                let term1 = apply_monomial(&[FermiOp::Annihilate(x), FermiOp::Create(y)], &psi)
                    .unwrap();
                let term2 = apply_monomial(&[FermiOp::Create(y), FermiOp::Annihilate(x)], &psi)
                    .unwrap();
                let mut sum = term1;
                sum.add_assign(&term2);
                let expected = if x == y { 1.0 } else { 0.0 };
                let mut diff = sum;
                for (d, p) in diff.amplitudes.iter_mut().zip(&psi.amplitudes) {
                    *d -= expected * p;
                }
                let err = diff.amplitudes.iter().map(|v| v.norm()).fold(0.0, f64::max);
                assert!(err < 1e-12, "{{c_{x}, c†_{y}}} deviates by {err}");
            }
        }
    }
}

#[test]
fn pair_operator_sector_blocks_match_oracle() {
    let lat = build_chain(6, Boundary::Open).unwrap();
    let c = sample_couplings(&lat, SamplingRanges::standard(), 33, CouplingMode::Bipartite)
        .unwrap();
    let full = q_full(&c);
    for n_particles in 2..=6 {
        let basis = enumerate_sector(6, n_particles).unwrap();
        let q = build_q_operator(&c, &basis).unwrap();
        let block = sector_block(&full, q.codomain(), &basis);
        assert!(
            max_diff(&q.to_dense(), &block) < 1e-13,
            "Q block mismatch at N={n_particles}"
        );
    }
}

#[test]
fn q_operator_adjoint_raises_particle_number() {
    // Q and its adjoint connect the same sector pair with conjugate blocks.
    let lat = build_chain(4, Boundary::Open).unwrap();
    let c = sample_couplings(&lat, SamplingRanges::standard(), 1, CouplingMode::Bipartite)
        .unwrap();
    let basis = enumerate_sector(4, 2).unwrap();
    let q = build_q_operator(&c, &basis).unwrap();
    let full = q_full(&c);
    let qdag_block = sector_block(&adjoint(&full), &basis, q.codomain());
    let got: Array2<C64> = adjoint(&q.to_dense());
    assert!(max_diff(&got, &qdag_block) < 1e-13);
}
