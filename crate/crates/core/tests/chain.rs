use std::fs;

use rgstar::lattice::Lattice;
use rgstar::mcmc::run;
use rgstar::oracle::{boltzmann_target, distribution_distance, enumerate_states, Histogram};
use rgstar::runner::{execute, RunManifest};
use rgstar::state::{Snapshot, SystemState};
use rgstar::{Chain, ChainConfig, DegreeMode, Energy, EnergyModel, Implementation, LatticeConfig};

struct Shifted(EnergyModel);

impl Energy for Shifted {
    fn energy(&self, lattice: &Lattice, state: &SystemState) -> f64 {
        self.0.energy(lattice, state) + 17.0
    }
}

fn contact_config(implementation: Implementation) -> ChainConfig {
    let mut config = ChainConfig::new(LatticeConfig::new(2, 3), 2, 2, DegreeMode::fixed(2), 1);
    config.energy = EnergyModel::Contact { epsilon: 0.8 };
    config.implementation = implementation;
    config.seed = 21;
    config
}

#[test]
fn constant_energy_shift_leaves_the_trajectory_unchanged() {
    let config = contact_config(Implementation::Naive);
    let mut plain = Chain::new(config.clone()).unwrap();
    let start = plain.state().clone();
    let mut shifted = Chain::with_energy(config, start, Shifted(EnergyModel::Contact { epsilon: 0.8 })).unwrap();
    for _ in 0..5_000 {
        let a = plain.step();
        let b = shifted.step();
        assert_eq!(a.kind, b.kind);
        assert_eq!(plain.state().canonical_key(), shifted.state().canonical_key());
    }
}

#[test]
fn contact_energy_chain_reaches_the_boltzmann_law() {
    for implementation in [Implementation::Naive, Implementation::Entangled] {
        let config = contact_config(implementation);
        let lattice = Lattice::new(config.lattice).unwrap();
        let space = enumerate_states(&lattice, 2, 2).unwrap();
        let target = boltzmann_target(&space, &config.energy);
        let mut chain = Chain::new(config).unwrap();
        let mut hist = Histogram::new();
        for _ in 0..300_000 {
            chain.step();
            *hist.entry(chain.state().canonical_key()).or_insert(0) += 1;
        }
        let d = distribution_distance(&hist, &space, &target).unwrap();
        assert!(d.total_variation < 0.02, "{implementation:?}: {d:?}");
    }
}

#[test]
fn runs_are_reproducible() {
    let mut config = ChainConfig::new(LatticeConfig::new(2, 5), 3, 4, DegreeMode::fixed(2), 2);
    config.steps = 2_000;
    config.seed = 8;
    config.snapshot_every = Some(500);
    let a = run(&config).unwrap();
    let b = run(&config).unwrap();
    assert_eq!(a.snapshots.len(), 5);
    for ((sa, xa), (sb, xb)) in a.snapshots.iter().zip(&b.snapshots) {
        assert_eq!(sa, sb);
        assert_eq!(xa.canonical_key(), xb.canonical_key());
    }
    assert_eq!(a.stats.csv_row(), b.stats.csv_row());
}

#[test]
fn mixed_lengths_are_preserved() {
    for implementation in [Implementation::Naive, Implementation::Entangled] {
        let mut config = ChainConfig::new(LatticeConfig::new(2, 5), 3, 2, DegreeMode::fixed(3), 1);
        config.length = None;
        config.lengths = Some(vec![2, 3, 5]);
        config.implementation = implementation;
        config.steps = 3_000;
        let lattice = Lattice::new(config.lattice).unwrap();
        let out = run(&config).unwrap();
        let mut lengths = out.final_state.lengths();
        lengths.sort_unstable();
        assert_eq!(lengths, vec![2, 3, 5]);
        assert!(out.final_state.validate(&lattice).is_ok());
        assert!(out.stats.acceptances > 0);
        let text = Snapshot::from_state(&lattice, &out.final_state).emit();
        assert!(text.starts_with("2 5 3 0\n"));
    }
}

#[test]
fn zero_steps_writes_the_initial_snapshot_and_zero_counters() {
    let dir = tempfile::tempdir().unwrap();
    let config = ChainConfig::new(LatticeConfig::new(2, 4), 2, 3, DegreeMode::fixed(3), 1);
    let manifest = RunManifest::new(&dir.path().join("c.json"), config, dir.path(), 1, None).unwrap();
    let summary = execute(&manifest).unwrap();
    assert_eq!(summary.chains[0].steps, 0);
    assert_eq!(summary.chains[0].acceptances, 0);
    assert_eq!(summary.construction_rate, 0.0);
    let snap = fs::read_to_string(dir.path().join("snapshot-0.txt")).unwrap();
    assert_eq!(snap, "2 4 2 3\n0 1 2\n3 7 6\n");
    let csv = fs::read_to_string(dir.path().join("stats.csv")).unwrap();
    assert_eq!(csv.lines().nth(1), Some("0,0,0,0,0,0"));
}

#[test]
fn multi_chain_output_is_byte_identical_across_runs() {
    let mut config = ChainConfig::new(LatticeConfig::new(2, 4), 2, 3, DegreeMode::fixed(3), 1);
    config.steps = 1_000;
    config.stats_every = Some(100);
    config.snapshot_every = Some(250);
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for dir in &dirs {
        let mut m = RunManifest::new(&dir.path().join("c.json"), config.clone(), dir.path(), 3, Some(40)).unwrap();
        m.oracle = true;
        let summary = execute(&m).unwrap();
        assert_eq!(summary.chains.iter().map(|c| c.seed).collect::<Vec<_>>(), vec![40, 41, 42]);
        assert!(summary.chains.iter().all(|c| c.total_variation.is_some()));
    }
    let listing = |root: &std::path::Path| {
        let mut files = Vec::new();
        for chain in ["chain-0", "chain-1", "chain-2"] {
            for entry in fs::read_dir(root.join(chain)).unwrap() {
                let path = entry.unwrap().path();
                files.push((path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap()));
            }
        }
        files.push(("summary.json".into(), fs::read(root.join("summary.json")).unwrap()));
        files.sort();
        files
    };
    let (a, b) = (listing(dirs[0].path()), listing(dirs[1].path()));
    assert_eq!(a.len(), 3 * 6 + 1);
    assert!(a == b);
    let stats = |chain: &str| &a.iter().find(|(p, _)| p == &std::path::Path::new(chain).join("stats.csv")).unwrap().1;
    assert_ne!(stats("chain-0"), stats("chain-1"));
}

#[test]
fn chain_starts_from_a_snapshot_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("start.txt"), "2 4 2 3\n5 6 7\n8 12 13\n").unwrap();
    let mut config = ChainConfig::new(LatticeConfig::new(2, 4), 2, 3, DegreeMode::fixed(3), 1);
    config.initial_snapshot = Some("start.txt".into());
    let manifest = RunManifest::new(&dir.path().join("c.json"), config, &dir.path().join("out"), 1, None).unwrap();
    execute(&manifest).unwrap();
    let snap = fs::read_to_string(dir.path().join("out/snapshot-0.txt")).unwrap();
    assert_eq!(snap, "2 4 2 3\n5 6 7\n8 12 13\n");
}
