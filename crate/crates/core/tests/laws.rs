use std::collections::HashMap;

use rgstar::oracle::two_sample_chi_square;
use rgstar::state::boxed_initial_state;
use rgstar::verify;
use rgstar::{Chain, ChainConfig, DegreeMode, Implementation, Lattice, LatticeConfig, StepKind};

#[test]
fn generation_order_does_not_change_the_law() {
    let r = verify::order_independence(100_000, 71);
    assert!(r.comparison.p_value > 0.01, "{r:?}");
}

#[test]
fn lazy_growth_matches_naive_growth() {
    let r = verify::lazy_growth_equivalence(100_000, 72).unwrap();
    assert!(r.comparison.p_value > 0.01, "{r:?}");
}

#[test]
fn lazy_compatible_weights_match_naive_weights() {
    let r = verify::lazy_weight_equivalence(100_000, 73).unwrap();
    assert!(r.comparison.p_value > 0.01, "{r:?}");
}

/// One step from the same state under both implementations: the law of
/// (outcome, resulting state) must agree.
#[test]
fn single_step_joint_law_matches() {
    for (a, n, length, k, ell) in [(4, 2, 3, 3, 1), (5, 4, 4, 2, 2)] {
        let lattice = Lattice::with_shape(2, a).unwrap();
        let start = boxed_initial_state(&lattice, n, length).unwrap();
        let mut tallies: [HashMap<(u8, Vec<u32>), u64>; 2] = Default::default();
        for (which, implementation) in [Implementation::Naive, Implementation::Entangled].into_iter().enumerate() {
            for seed in 0..100_000u64 {
                let mut config = ChainConfig::new(LatticeConfig::new(2, a), n, length, DegreeMode::fixed(k), ell);
                config.implementation = implementation;
                config.seed = seed * 2 + which as u64;
                let mut chain = Chain::from_state(config, start.clone()).unwrap();
                let outcome = chain.step();
                let kind = match outcome.kind {
                    StepKind::GrowthFailed => 0,
                    StepKind::Rejected => 1,
                    StepKind::Accepted => 2,
                };
                let key = chain.state().canonical_key().as_slice().to_vec();
                *tallies[which].entry((kind, key)).or_insert(0) += 1;
            }
        }
        let r = two_sample_chi_square(&tallies[0], &tallies[1]);
        assert!(r.p_value > 0.01, "a={a}: {r:?}");
    }
}
