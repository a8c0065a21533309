use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rgstar::graph::{generate, is_compatible};
use rgstar::growth::{grow, weight, weight_w0};
use rgstar::oracle::brute_weight;
use rgstar::state::Snapshot;
use rgstar::{Chain, ChainConfig, DegreeMode, Lattice, LatticeConfig, VertexId};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn neighbors_are_symmetric_and_coordinates_round_trip(d in 1usize..=3, a in 3usize..=6, pick in 0usize..1000) {
        let lattice = Lattice::with_shape(d, a).unwrap();
        let v = VertexId((pick % lattice.vertex_count()) as u32);
        let coords = lattice.to_coords(v).unwrap();
        prop_assert_eq!(lattice.to_index(&coords).unwrap(), v);
        for &u in lattice.neighbors(v) {
            prop_assert!(lattice.are_neighbors(u, v));
            prop_assert!(lattice.neighbors(u).contains(&v));
        }
    }

    #[test]
    fn snapshots_round_trip(a in 4usize..=6, n in 1usize..=3, length in 2usize..=4, steps in 0u64..300, seed: u64) {
        let mut config = ChainConfig::new(LatticeConfig::new(2, a), n, length, DegreeMode::fixed(3), 1);
        config.seed = seed;
        let mut chain = Chain::new(config).unwrap();
        for _ in 0..steps {
            chain.step();
        }
        let text = Snapshot::from_state(chain.lattice(), chain.state()).emit();
        let (lattice, state) = Snapshot::parse(&text).unwrap().into_state().unwrap();
        prop_assert_eq!(lattice.config(), chain.lattice().config());
        prop_assert_eq!(state.canonical_key(), chain.state().canonical_key());
        prop_assert_eq!(Snapshot::from_state(&lattice, &state).emit(), text);
    }

    #[test]
    fn grown_polymers_are_compatible_and_weights_agree(
        a in 4usize..=5,
        k in 1usize..=4,
        length in 2usize..=5,
        ell in 0usize..=5,
        warmup in 0u64..100,
        seed: u64,
    ) {
        let ell = ell.min(length);
        let mut config = ChainConfig::new(LatticeConfig::new(2, a), 2, 3, DegreeMode::fixed(4), 1);
        config.seed = seed;
        let mut chain = Chain::new(config).unwrap();
        for _ in 0..warmup {
            chain.step();
        }
        let lattice = chain.lattice().clone();
        let mut state = chain.into_state();
        state.remove_polymer(0).unwrap();
        let occ = state.occupancy();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = generate(&lattice, occ, &DegreeMode::fixed(k), &mut rng).unwrap();
        if let Some(c) = grow(&mut g, occ, length, ell, &mut rng).unwrap().into_polymer() {
            prop_assert_eq!(c.len(), length);
            prop_assert!(c.validate(&lattice).is_ok());
            prop_assert!(is_compatible(&g, &c));
            prop_assert!(c.vertices().iter().all(|&v| occ.is_free(v)));
            let w = weight(&mut g, occ, &c, ell, &mut rng).unwrap();
            let w0 = weight_w0(&mut g, &c, &mut rng).unwrap();
            prop_assert_eq!(w.value(), brute_weight(&g, occ, &c, ell).into());
            prop_assert!(w.factors().iter().all(|&f| f >= 1 && f as usize <= k));
            prop_assert!(w.value() <= w0.value());
        }
    }
}
