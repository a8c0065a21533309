//! Named verification suites. Each measurement function returns the raw
//! statistics; [`run_suite`] compares them against default thresholds and
//! produces a JSON-serializable report.

use std::collections::HashMap;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::graph::{
    generate, generate_compatible, generate_from_root, generate_with_order, prob_c_exact,
    prob_u_exact, DegreeDistribution, DegreeMode, GraphConstants, UnderlyingGraph, WaitingOrder,
};
use crate::growth::{grow, grow_traced, weight, weight_w0, EventKind, Weight};
use crate::lattice::{Lattice, LatticeConfig, VertexId};
use crate::mcmc::{acceptance_probability, Chain, ChainConfig, Implementation};
use crate::oracle::{
    self, boltzmann_target, brute_weight, check_irreducibility, check_irreducibility_streaming,
    distribution_distance, enumerate_compatible_graphs, enumerate_polymers, enumerate_states,
    enumerate_underlying_graphs, exact_kernel_kq, exact_kernel_kq_rational,
    max_balance_violation, rational_balance_violations, replacement_footprints,
    two_sample_chi_square, Distance, Histogram, ReachabilityReport,
};
use crate::state::{Occupancy, Polymer, SystemState};

pub const SUITES: &[&str] = &[
    "graphs",
    "growth",
    "balance",
    "stationarity",
    "irreducibility",
    "entangled",
    "extended",
];

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `|observed - n p| / sqrt(n p (1 - p))`.
pub fn binomial_z(observed: u64, n: u64, p: f64) -> f64 {
    let mean = n as f64 * p;
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    if sd == 0.0 {
        if (observed as f64 - mean).abs() < 0.5 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (observed as f64 - mean).abs() / sd
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GraphLawReport {
    pub instance: String,
    pub graphs: usize,
    /// `|sum of P_u over the enumerated support - 1|`.
    pub sum_error: f64,
    /// Graphs whose branch probability differs from the closed form.
    pub formula_mismatches: usize,
    pub draws: u64,
    /// Largest binomial z-score of a graph's empirical frequency.
    pub max_z: f64,
    /// Drawn graphs missing from the enumeration.
    pub unknown_draws: u64,
}

/// Enumerates the graph law on the whole lattice (every vertex free) and
/// compares it with the closed form and with `draws` Monte Carlo draws.
pub fn graph_law(lattice: &Lattice, mode: &DegreeMode, draws: u64, seed: u64) -> Result<GraphLawReport> {
    let roots: Vec<VertexId> = lattice.vertices().collect();
    let support = enumerate_underlying_graphs(lattice, &roots, mode)?;
    let consts = GraphConstants::new(lattice.q(), roots.len());
    let mut total = BigRational::zero();
    let mut mismatches = 0;
    let mut index = HashMap::new();
    for (i, (g, p)) in support.iter().enumerate() {
        if prob_u_exact(g, &consts, mode) != *p {
            mismatches += 1;
        }
        total += p;
        index.insert(g.signature(), i);
    }
    let mut counts = vec![0u64; support.len()];
    let mut unknown = 0;
    let occ = Occupancy::empty(lattice.vertex_count());
    let mut r = rng(seed);
    for _ in 0..draws {
        let g = generate(lattice, &occ, mode, &mut r)?;
        match index.get(&g.signature()) {
            Some(&i) => counts[i] += 1,
            None => unknown += 1,
        }
    }
    let max_z = support
        .iter()
        .zip(&counts)
        .map(|((_, p), &c)| binomial_z(c, draws, to_f64(p)))
        .fold(0.0, f64::max);
    Ok(GraphLawReport {
        instance: format!("d={} a={} {:?}", lattice.dimension(), lattice.side(), mode),
        graphs: support.len(),
        sum_error: (to_f64(&total) - 1.0).abs(),
        formula_mismatches: mismatches,
        draws,
        max_z,
        unknown_draws: unknown,
    })
}

fn to_f64(x: &BigRational) -> f64 {
    num_traits::ToPrimitive::to_f64(x).unwrap_or(f64::NAN)
}

#[derive(Clone, Debug, Serialize)]
pub struct CompatibleLawReport {
    pub instance: String,
    pub graphs: usize,
    pub sum_error: f64,
    /// Graphs whose branch probability differs from the closed form.
    pub formula_mismatches: usize,
    /// Compatible graphs with `P_c != eta * P_u` exactly.
    pub proportionality_mismatches: usize,
}

/// Enumerates the compatible-graph law for `c` under fixed `k` and checks
/// it against the closed form and against `eta * P_u` with `gamma = a^d`.
pub fn compatible_law(lattice: &Lattice, c: &Polymer, k: usize) -> Result<CompatibleLawReport> {
    let mode = DegreeMode::fixed(k);
    let support = enumerate_compatible_graphs(lattice, c, &mode)?;
    let consts = GraphConstants::new(lattice.q(), lattice.vertex_count());
    let eta = consts.eta_exact(k, c.len());
    let mut total = BigRational::zero();
    let (mut formula, mut proportional) = (0, 0);
    for (g, p) in &support {
        let pc = prob_c_exact(g, c, &consts, &mode);
        if pc != *p {
            formula += 1;
        }
        if pc != &eta * prob_u_exact(g, &consts, &mode) {
            proportional += 1;
        }
        total += p;
    }
    Ok(CompatibleLawReport {
        instance: format!("d={} a={} k={k} L={}", lattice.dimension(), lattice.side(), c.len()),
        graphs: support.len(),
        sum_error: (to_f64(&total) - 1.0).abs(),
        formula_mismatches: formula,
        proportionality_mismatches: proportional,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthLawReport {
    pub polymers: usize,
    pub draws: u64,
    /// Largest z-score of a polymer's success frequency against `1 / W`.
    pub max_z: f64,
    pub failure_rate: f64,
    /// `sum 1/W + empirical failure rate`.
    pub total_mass: f64,
    /// Polymers where the growth weight and the brute-force weight differ.
    pub weight_mismatches: usize,
    /// Successful outputs not in the enumeration.
    pub unknown_outputs: u64,
}

/// The fixed growth instance: `(Z/5Z)^2` with one blocking polymer along
/// row 1, a `k = 3` graph rooted at (3, 2), `L = 4`.
pub fn growth_instance(seed: u64) -> (Lattice, SystemState, UnderlyingGraph) {
    let lattice = Lattice::with_shape(2, 5).expect("valid shape");
    let at = |x: usize, y: usize| lattice.to_index(&[x, y]).expect("in range");
    let blocker = Polymer::new(vec![at(1, 0), at(1, 1), at(1, 2), at(1, 3)]);
    let state = SystemState::new(&lattice, vec![blocker]).expect("valid state");
    let g = generate_from_root(&lattice, at(2, 2), &DegreeMode::fixed(3), &mut rng(seed));
    (lattice, state, g)
}

/// Grows `draws` times on a fixed graph and compares the law of the
/// outputs with `1 / W(C | G)`.
pub fn growth_law(
    g: &UnderlyingGraph,
    occupancy: &Occupancy,
    length: usize,
    ell: usize,
    draws: u64,
    seed: u64,
) -> Result<GrowthLawReport> {
    let polymers = enumerate_polymers(g, occupancy, length);
    let mut probs = Vec::with_capacity(polymers.len());
    let mut mismatches = 0;
    let mut no_rng = rand::rngs::mock::StepRng::new(0, 0);
    for c in &polymers {
        let w = weight(&mut g.clone(), occupancy, c, ell, &mut no_rng)?;
        let brute = brute_weight(g, occupancy, c, ell);
        if w.value() != brute.into() {
            mismatches += 1;
        }
        probs.push(1.0 / brute as f64);
    }
    let index: HashMap<&Polymer, usize> = polymers.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let mut counts = vec![0u64; polymers.len()];
    let mut failures = 0;
    let mut unknown = 0;
    let mut r = rng(seed);
    let mut graph = g.clone();
    for _ in 0..draws {
        match grow(&mut graph, occupancy, length, ell, &mut r)?.into_polymer() {
            Some(c) => match index.get(&c) {
                Some(&i) => counts[i] += 1,
                None => unknown += 1,
            },
            None => failures += 1,
        }
    }
    let max_z = counts
        .iter()
        .zip(&probs)
        .map(|(&c, &p)| binomial_z(c, draws, p))
        .fold(0.0, f64::max);
    let failure_rate = failures as f64 / draws as f64;
    Ok(GrowthLawReport {
        polymers: polymers.len(),
        draws,
        max_z,
        failure_rate,
        total_mass: probs.iter().sum::<f64>() + failure_rate,
        weight_mismatches: mismatches,
        unknown_outputs: unknown,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FastGrowthReport {
    pub k: usize,
    pub length: usize,
    pub draws: u64,
    pub expected: f64,
    pub observed: f64,
    pub z: f64,
}

/// With `ell = 0` on an empty lattice, the success probability of a
/// polymer none of whose steps is constrained is `k^-(L-1)`.
pub fn fast_growth(k: usize, length: usize, draws: u64, seed: u64) -> Result<FastGrowthReport> {
    let lattice = Lattice::with_shape(2, 9)?;
    let occ = Occupancy::empty(lattice.vertex_count());
    let mode = DegreeMode::fixed(k);
    let mut r = rng(seed);
    let mut no_rng = rand::rngs::mock::StepRng::new(0, 0);
    // Draw graphs until one carries a polymer whose every step has all k
    // out-neighbors free and off the prefix.
    let (g, target) = loop {
        let g = generate_from_root(&lattice, VertexId(40), &mode, &mut r);
        let free = enumerate_polymers(&g, &occ, length).into_iter().find(|c| {
            let w = weight(&mut g.clone(), &occ, c, 0, &mut no_rng).expect("compatible");
            w.factors().iter().all(|&f| f as usize == k)
        });
        if let Some(c) = free {
            break (g, c);
        }
    };
    let mut hits = 0;
    let mut graph = g.clone();
    for _ in 0..draws {
        if grow(&mut graph, &occ, length, 0, &mut r)?.polymer() == Some(&target) {
            hits += 1;
        }
    }
    let expected = (k as f64).powi(-(length as i32 - 1));
    Ok(FastGrowthReport {
        k,
        length,
        draws,
        expected,
        observed: hits as f64 / draws as f64,
        z: binomial_z(hits, draws, expected),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FeelerLimitReport {
    pub instances: usize,
    /// Instances where exhaustive growth and enumeration disagree.
    pub disagreements: usize,
    pub instances_without_polymer: usize,
    /// Recoil events seen in `ell = 0` traces.
    pub fast_recoils: usize,
    pub fast_attempts: usize,
}

/// Random tiny instances: occupancies taken from short chain runs, random
/// `k`, `L` and root. Checks `ell = L` growth against enumeration and that
/// `ell = 0` growth never recoils.
pub fn feeler_limits(instances: usize, seed: u64) -> Result<FeelerLimitReport> {
    let mut r = rng(seed);
    let mut disagreements = 0;
    let mut empty = 0;
    let mut fast_recoils = 0;
    let mut fast_attempts = 0;
    for _ in 0..instances {
        let a = r.gen_range(4..=5);
        let length = r.gen_range(3..=5);
        let lattice = Lattice::with_shape(2, a)?;
        let max_n = lattice.vertex_count() / length;
        let n = r.gen_range(2..=max_n.min(5));
        let k = r.gen_range(1..=4);
        let mut config = ChainConfig::new(LatticeConfig::new(2, a), n, length, DegreeMode::fixed(4), 1);
        config.seed = r.gen();
        let mut chain = Chain::new(config)?;
        for _ in 0..r.gen_range(0..200) {
            chain.step();
        }
        let mut state = chain.into_state();
        state.remove_polymer(r.gen_range(0..n))?;
        let occ = state.occupancy();
        let free: Vec<VertexId> = occ.free_vertices().collect();
        let root = free[r.gen_range(0..free.len())];
        let mode = DegreeMode::fixed(k);
        let g = generate_from_root(&lattice, root, &mode, &mut r);
        let exists = !enumerate_polymers(&g, occ, length).is_empty();
        if !exists {
            empty += 1;
        }
        let mut graph = g.clone();
        for _ in 0..20 {
            if grow(&mut graph, occ, length, length, &mut r)?.is_success() != exists {
                disagreements += 1;
                break;
            }
        }
        for _ in 0..20 {
            let mut trace = Vec::new();
            grow_traced(&mut graph, occ, length, 0, &mut r, Some(&mut trace))?;
            fast_attempts += 1;
            fast_recoils += trace.iter().filter(|e| e.kind == EventKind::Recoil).count();
        }
    }
    Ok(FeelerLimitReport {
        instances,
        disagreements,
        instances_without_polymer: empty,
        fast_recoils,
        fast_attempts,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BalanceReport {
    pub ell: usize,
    pub energy: EnergyModel,
    pub states: usize,
    /// `max |pi_i P_ij - pi_j P_ji|` in floating point.
    pub max_violation: f64,
    /// Pairs violating balance in exact arithmetic (uniform energy only).
    pub exact_violations: Option<usize>,
    pub max_row_error: f64,
    /// Pairs differing in one polymer with a zero transition probability.
    pub zero_one_polymer_moves: usize,
    /// Sup distance between the power-iteration fixed point and the target.
    pub stationary_error: f64,
}

/// Exact kernel of the `k = Q` chain on `(Z/4Z)^2` with two dimers.
pub fn balance(ell: usize, energy: EnergyModel) -> Result<BalanceReport> {
    let lattice = Lattice::with_shape(2, 4)?;
    let space = enumerate_states(&lattice, 2, 2)?;
    let mode = DegreeMode::fixed(4);
    let kernel = exact_kernel_kq(&space, &mode, ell, &energy)?;
    let pi = boltzmann_target(&space, &energy);
    let exact_violations = match energy {
        EnergyModel::Uniform => Some(rational_balance_violations(&exact_kernel_kq_rational(&space, &mode, ell)?)),
        EnergyModel::Contact { .. } => None,
    };
    let max_row_error = (0..space.len()).map(|i| (kernel.row_sum(i) - 1.0).abs()).fold(0.0, f64::max);
    let mut zero_moves = 0;
    for i in 0..space.len() {
        for j in 0..space.len() {
            if i != j && differ_by_one(space.polymers(i), space.polymers(j)) && kernel.rows[i].get(&j).copied().unwrap_or(0.0) <= 0.0 {
                zero_moves += 1;
            }
        }
    }
    let (x, _) = kernel.stationary_by_power_iteration(1e-15, 200_000);
    let stationary_error = x.iter().zip(&pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(BalanceReport {
        ell,
        energy,
        states: space.len(),
        max_violation: max_balance_violation(&kernel, &pi),
        exact_violations,
        max_row_error,
        zero_one_polymer_moves: zero_moves,
        stationary_error,
    })
}

fn differ_by_one(a: &[Polymer], b: &[Polymer]) -> bool {
    let norm = |c: &Polymer| c.canonical();
    let bs: Vec<Polymer> = b.iter().map(norm).collect();
    a.iter().filter(|c| !bs.contains(&norm(c))).count() == 1
}

#[derive(Clone, Debug, Serialize)]
pub struct StationarityReport {
    pub config: ChainConfig,
    pub states: usize,
    pub steps: u64,
    pub distance: Distance,
    pub construction_rate: f64,
    pub acceptance_rate: f64,
}

/// Runs a chain and records every visited state.
pub fn chain_histogram(config: &ChainConfig, steps: u64, thin: u64) -> Result<(Histogram, crate::mcmc::ChainStats)> {
    let mut chain = Chain::new(config.clone())?;
    let mut hist = Histogram::new();
    for t in 1..=steps {
        chain.step();
        if t % thin == 0 {
            *hist.entry(chain.state().canonical_key()).or_insert(0) += 1;
        }
    }
    Ok((hist, chain.stats().clone()))
}

/// The long-run benchmark: `(Z/4Z)^2`, two trimers, `k = 3`, `ell = 1`.
pub fn benchmark_config(implementation: Implementation, seed: u64) -> ChainConfig {
    let mut config = ChainConfig::new(LatticeConfig::new(2, 4), 2, 3, DegreeMode::fixed(3), 1);
    config.implementation = implementation;
    config.seed = seed;
    config
}

/// Total variation between the chain's empirical law and `q` over the
/// enumerated state space.
pub fn stationarity(config: &ChainConfig, steps: u64) -> Result<StationarityReport> {
    let lattice = Lattice::new(config.lattice)?;
    let lengths = config.polymer_lengths()?;
    if lengths.iter().any(|&l| l != lengths[0]) {
        return Err(Error::InvalidConfig("stationarity needs equal lengths".into()));
    }
    let space = enumerate_states(&lattice, config.n, lengths[0])?;
    let target = boltzmann_target(&space, &config.energy);
    let (hist, stats) = chain_histogram(config, steps, 1)?;
    Ok(StationarityReport {
        config: config.clone(),
        states: space.len(),
        steps,
        distance: distribution_distance(&hist, &space, &target)?,
        construction_rate: stats.construction_rate(),
        acceptance_rate: stats.acceptance_rate(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceReport {
    pub steps: u64,
    pub thin: u64,
    pub comparison: Distance,
    pub audited_steps: u64,
    /// Steps where a lazy graph assigned more vertices than its completion.
    pub audit_violations: u64,
}

/// Compares naive and entangled chains state by state, recording every
/// `thin`-th state of each.
pub fn entangled_equivalence(steps: u64, thin: u64, audit_steps: u64, seed: u64) -> Result<EquivalenceReport> {
    let (naive, _) = chain_histogram(&benchmark_config(Implementation::Naive, seed), steps, thin)?;
    let (lazy, _) = chain_histogram(&benchmark_config(Implementation::Entangled, seed + 1), steps, thin)?;
    let mut chain = Chain::new(benchmark_config(Implementation::Entangled, seed + 2))?;
    chain.enable_audit(seed + 3);
    let mut violations = 0;
    for _ in 0..audit_steps {
        if !chain.step().audit.is_some_and(|a| a.within_bounds()) {
            violations += 1;
        }
    }
    Ok(EquivalenceReport {
        steps,
        thin,
        comparison: two_sample_chi_square(&naive, &lazy),
        audited_steps: audit_steps,
        audit_violations: violations,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LazyGrowthReport {
    pub draws: u64,
    pub comparison: Distance,
}

/// Per-polymer outcome frequencies of a naive and a lazy growth attempt
/// from a fixed root on the growth instance occupancy.
pub fn lazy_growth_equivalence(draws: u64, seed: u64) -> Result<LazyGrowthReport> {
    let (lattice, state, g) = growth_instance(seed);
    let occ = state.occupancy();
    let mode = DegreeMode::fixed(3);
    let mut r = rng(seed + 1);
    let mut naive: HashMap<Option<Polymer>, u64> = HashMap::new();
    let mut lazy: HashMap<Option<Polymer>, u64> = HashMap::new();
    for _ in 0..draws {
        let mut g = generate_from_root(&lattice, g.root(), &mode, &mut r);
        *naive.entry(grow(&mut g, occ, 4, 2, &mut r)?.into_polymer()).or_insert(0) += 1;
        let mut l = crate::entangled::LazyGraph::rooted_at(&lattice, &mode, g.root());
        *lazy.entry(grow(&mut l, occ, 4, 2, &mut r)?.into_polymer()).or_insert(0) += 1;
    }
    Ok(LazyGrowthReport {
        draws,
        comparison: two_sample_chi_square(&naive, &lazy),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LazyWeightReport {
    pub draws: u64,
    pub comparison: Distance,
}

/// Law of `W(C_o | G_o)` under naive and lazy compatible graphs.
pub fn lazy_weight_equivalence(draws: u64, seed: u64) -> Result<LazyWeightReport> {
    let lattice = Lattice::with_shape(2, 5)?;
    let at = |x: usize, y: usize| lattice.to_index(&[x, y]).expect("in range");
    let state = SystemState::new(&lattice, vec![Polymer::new(vec![at(1, 0), at(1, 1), at(1, 2), at(1, 3)])])?;
    let occ = state.occupancy();
    let c = Polymer::new(vec![at(2, 1), at(2, 2), at(3, 2), at(3, 3)]);
    let mode = DegreeMode::fixed(2);
    let mut r = rng(seed);
    let mut naive: HashMap<Vec<u32>, u64> = HashMap::new();
    let mut lazy: HashMap<Vec<u32>, u64> = HashMap::new();
    for _ in 0..draws {
        let mut g = generate_compatible(&lattice, &c, &mode, &mut r);
        let w = weight(&mut g, occ, &c, 1, &mut r)?;
        *naive.entry(w.factors().to_vec()).or_insert(0) += 1;
        let mut l = crate::entangled::LazyGraph::compatible(&lattice, &mode, &c, &mut r);
        let w = weight(&mut l, occ, &c, 1, &mut r)?;
        *lazy.entry(w.factors().to_vec()).or_insert(0) += 1;
    }
    Ok(LazyWeightReport {
        draws,
        comparison: two_sample_chi_square(&naive, &lazy),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DegenerateReport {
    pub tuples: usize,
    pub max_difference: f64,
}

/// Random weight tuples: with `W0 = k^(L-1)` on both sides the extended
/// acceptance probability must equal the fixed-`k` one.
pub fn degenerate_extended(tuples: usize, seed: u64) -> DegenerateReport {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..tuples {
        let k = r.gen_range(1..=6u32);
        let length = r.gen_range(2..=30usize);
        let factors = |r: &mut ChaCha8Rng| Weight::from_factors((1..length).map(|_| r.gen_range(1..=k)).collect());
        let (wn, wo) = (factors(&mut r), factors(&mut r));
        let w0 = Weight::from_factors(vec![k; length - 1]);
        let q: f64 = (r.gen::<f64>() * 6.0 - 3.0).exp();
        let fixed = acceptance_probability(q, &wn, &wo, None);
        let ext = acceptance_probability(q, &wn, &wo, Some((&w0, &w0)));
        worst = worst.max((fixed - ext).abs());
    }
    DegenerateReport {
        tuples,
        max_difference: worst,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtendedLawReport {
    pub graphs: usize,
    pub sum_u_error: f64,
    pub sum_c_error: f64,
    /// Compatible graphs with `P_c != (gamma Q^(L-1) / 2) P_u / W0` exactly.
    pub rewrite_mismatches: usize,
    pub formula_mismatches: usize,
}

/// Closed forms of the random-degree laws on `Z/5Z`: the product form
/// of `P_c` against its rewrite through `P_u` and `W0`.
pub fn extended_law(p: &[f64]) -> Result<ExtendedLawReport> {
    let lattice = Lattice::with_shape(1, 5)?;
    let mode = DegreeMode::Extended(DegreeDistribution::new(p.to_vec())?);
    let consts = GraphConstants::new(lattice.q(), lattice.vertex_count());
    let roots: Vec<VertexId> = vec![VertexId(0)];
    let single_root = GraphConstants::new(lattice.q(), 1);
    let support = enumerate_underlying_graphs(&lattice, &roots, &mode)?;
    let mut sum_u = BigRational::zero();
    let mut formula = 0;
    for (g, prob) in &support {
        if prob_u_exact(g, &single_root, &mode) != *prob {
            formula += 1;
        }
        sum_u += prob;
    }
    let c = Polymer::from_indices(&[0, 1, 2]);
    let compatible = enumerate_compatible_graphs(&lattice, &c, &mode)?;
    let mut sum_c = BigRational::zero();
    let mut rewrite = 0;
    let mut no_rng = rand::rngs::mock::StepRng::new(0, 0);
    let scale = BigRational::new(
        BigInt::from(consts.gamma) * BigInt::from(lattice.q()).pow(c.len() as u32 - 1),
        BigInt::from(2),
    );
    for (g, prob) in &compatible {
        let pc = prob_c_exact(g, &c, &consts, &mode);
        if pc != *prob {
            formula += 1;
        }
        let w0 = weight_w0(&mut g.clone(), &c, &mut no_rng)?;
        let rewritten = &scale * prob_u_exact(g, &consts, &mode) / BigRational::from_integer(BigInt::from(w0.value()));
        if rewritten != pc {
            rewrite += 1;
        }
        sum_c += prob;
    }
    Ok(ExtendedLawReport {
        graphs: support.len() + compatible.len(),
        sum_u_error: (to_f64(&sum_u) - 1.0).abs(),
        sum_c_error: (to_f64(&sum_c) - 1.0).abs(),
        rewrite_mismatches: rewrite,
        formula_mismatches: formula,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderReport {
    pub draws: u64,
    pub comparison: Distance,
}

/// FIFO against LIFO waiting sets on `(Z/3Z)^2` with `k = 2`.
pub fn order_independence(draws: u64, seed: u64) -> OrderReport {
    let lattice = Lattice::with_shape(2, 3).expect("valid shape");
    let mode = DegreeMode::fixed(2);
    let mut r = rng(seed);
    let mut fifo: HashMap<Vec<u32>, u64> = HashMap::new();
    let mut lifo: HashMap<Vec<u32>, u64> = HashMap::new();
    for _ in 0..draws {
        let g = generate_with_order(&lattice, VertexId(0), &mode, WaitingOrder::Fifo, &mut r);
        *fifo.entry(g.signature()).or_insert(0) += 1;
        let g = generate_with_order(&lattice, VertexId(0), &mode, WaitingOrder::Lifo, &mut r);
        *lifo.entry(g.signature()).or_insert(0) += 1;
    }
    // Graphs seen fewer than 10 times in total share one cell.
    let mut pooled_a = HashMap::new();
    let mut pooled_b = HashMap::new();
    let mut keys: Vec<&Vec<u32>> = fifo.keys().chain(lifo.keys()).collect();
    keys.sort();
    keys.dedup();
    for key in keys {
        let a = *fifo.get(key).unwrap_or(&0);
        let b = *lifo.get(key).unwrap_or(&0);
        let cell = if a + b < 10 { Vec::new() } else { key.clone() };
        *pooled_a.entry(cell.clone()).or_insert(0) += a;
        *pooled_b.entry(cell).or_insert(0) += b;
    }
    OrderReport {
        draws,
        comparison: two_sample_chi_square(&pooled_a, &pooled_b),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IrreducibilityReport {
    pub cases: Vec<(String, ReachabilityReport)>,
    /// Distinct replacement footprints per polymer of the trapped state.
    pub trapped_footprints: Vec<usize>,
}

/// The three enumerable cases and the local check of the trapped state.
pub fn irreducibility() -> Result<IrreducibilityReport> {
    let mut cases = Vec::new();
    let lat = Lattice::with_shape(1, 4)?;
    cases.push(("d=1 a=4 L=2 N=2".to_string(), check_irreducibility(&enumerate_states(&lat, 2, 2)?)));
    let lat = Lattice::with_shape(2, 3)?;
    cases.push(("d=2 a=3 L=2 N=4".to_string(), check_irreducibility(&enumerate_states(&lat, 4, 2)?)));
    let lat = Lattice::with_shape(2, 6)?;
    cases.push(("d=2 a=6 L=3 N=4".to_string(), check_irreducibility_streaming(&lat, 4, 3)?));
    let (lattice, state) = oracle::trapped_pinwheel()?;
    Ok(IrreducibilityReport {
        cases,
        trapped_footprints: replacement_footprints(&lattice, &state),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub seconds: f64,
    pub checks: Vec<Check>,
}

fn check<T: Serialize>(name: &str, passed: bool, measured: &T) -> Check {
    Check {
        name: name.to_string(),
        passed,
        measured: serde_json::to_value(measured).unwrap_or(Value::Null),
    }
}

/// Runs one named suite with its default sizes and thresholds.
pub fn run_suite(name: &str) -> Result<SuiteReport> {
    let started = Instant::now();
    let checks = match name {
        "graphs" => suite_graphs()?,
        "growth" => suite_growth()?,
        "balance" => suite_balance()?,
        "stationarity" => suite_stationarity()?,
        "irreducibility" => suite_irreducibility()?,
        "entangled" => suite_entangled()?,
        "extended" => suite_extended()?,
        other => return Err(Error::InvalidConfig(format!("unknown suite `{other}`"))),
    };
    Ok(SuiteReport {
        suite: name.to_string(),
        passed: checks.iter().all(|c| c.passed),
        seconds: started.elapsed().as_secs_f64(),
        checks,
    })
}

/// Every suite, in order.
pub fn run_all() -> Result<Vec<SuiteReport>> {
    SUITES.iter().map(|s| run_suite(s)).collect()
}

fn suite_graphs() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (d, a, k) in [(1, 6, 1), (2, 3, 4)] {
        let lattice = Lattice::with_shape(d, a)?;
        let r = graph_law(&lattice, &DegreeMode::fixed(k), 100_000, 1)?;
        let ok = r.sum_error < 1e-12 && r.formula_mismatches == 0 && r.max_z < 4.0 && r.unknown_draws == 0;
        checks.push(check(&format!("graph law {}", r.instance), ok, &r));
    }
    let lat = Lattice::with_shape(1, 6)?;
    let r = compatible_law(&lat, &Polymer::from_indices(&[1, 2, 3]), 1)?;
    checks.push(check("compatible law d=1 a=6 k=1", compat_ok(&r), &r));
    let lat = Lattice::with_shape(2, 3)?;
    let r = compatible_law(&lat, &Polymer::from_indices(&[0, 1, 4]), 4)?;
    checks.push(check("compatible law d=2 a=3 k=4", compat_ok(&r), &r));
    let r = order_independence(100_000, 2);
    checks.push(check("FIFO vs LIFO generation", r.comparison.p_value > 0.01, &r));
    Ok(checks)
}

fn compat_ok(r: &CompatibleLawReport) -> bool {
    r.sum_error < 1e-12 && r.formula_mismatches == 0 && r.proportionality_mismatches == 0
}

fn suite_growth() -> Result<Vec<Check>> {
    let (_, state, g) = growth_instance(19);
    let r = growth_law(&g, state.occupancy(), 4, 2, 200_000, 4)?;
    let ok = r.max_z < 4.0 && (r.total_mass - 1.0).abs() < 0.01 && r.weight_mismatches == 0 && r.unknown_outputs == 0;
    let mut checks = vec![check("growth law k=3 L=4 ell=2", ok, &r)];
    let r = fast_growth(3, 4, 200_000, 5)?;
    checks.push(check("ell=0 success probability", r.z < 3.0, &r));
    let r = feeler_limits(100, 6)?;
    checks.push(check("feeler limits", r.disagreements == 0 && r.fast_recoils == 0, &r));
    Ok(checks)
}

fn suite_balance() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for energy in [EnergyModel::Uniform, EnergyModel::Contact { epsilon: 0.8 }] {
        for ell in 0..=2 {
            let r = balance(ell, energy)?;
            let ok = r.max_violation < 1e-12
                && r.exact_violations.unwrap_or(0) == 0
                && r.max_row_error < 1e-12
                && r.zero_one_polymer_moves == 0
                && r.stationary_error < 1e-10;
            checks.push(check(&format!("balance ell={ell} {energy:?}"), ok, &r));
        }
    }
    Ok(checks)
}

fn suite_stationarity() -> Result<Vec<Check>> {
    let r = stationarity(&benchmark_config(Implementation::Naive, 1), 2_000_000)?;
    Ok(vec![check("naive chain TV", r.distance.total_variation < 0.02, &r)])
}

fn suite_irreducibility() -> Result<Vec<Check>> {
    let r = irreducibility()?;
    let expected = [false, true, true];
    let mut checks: Vec<Check> = r
        .cases
        .iter()
        .zip(expected)
        .map(|((name, rep), want)| check(name, rep.irreducible == want, rep))
        .collect();
    checks.push(check(
        "trapped pinwheel a=9 L=5",
        r.trapped_footprints.iter().all(|&f| f == 1),
        &r.trapped_footprints,
    ));
    Ok(checks)
}

fn suite_entangled() -> Result<Vec<Check>> {
    let r = stationarity(&benchmark_config(Implementation::Entangled, 1), 2_000_000)?;
    let mut checks = vec![check("entangled chain TV", r.distance.total_variation < 0.02, &r)];
    let r = entangled_equivalence(1_000_000, 10, 100_000, 7)?;
    checks.push(check(
        "naive vs entangled states",
        r.comparison.p_value > 0.01 && r.audit_violations == 0,
        &r,
    ));
    let r = lazy_growth_equivalence(100_000, 8)?;
    checks.push(check("naive vs lazy growth outcomes", r.comparison.p_value > 0.01, &r));
    let r = lazy_weight_equivalence(100_000, 9)?;
    checks.push(check("naive vs lazy compatible weights", r.comparison.p_value > 0.01, &r));
    Ok(checks)
}

/// The extended benchmark: the stationarity benchmark with degrees 2 or 3.
pub fn extended_benchmark_config(implementation: Implementation, seed: u64) -> ChainConfig {
    let mut config = benchmark_config(implementation, seed);
    config.mode = DegreeMode::Extended(DegreeDistribution { p: vec![0.0, 0.5, 0.5, 0.0] });
    config
}

fn suite_extended() -> Result<Vec<Check>> {
    let r = degenerate_extended(10_000, 10);
    let mut checks = vec![check("degenerate p equals fixed k", r.max_difference <= 1e-15, &r)];
    let r = extended_law(&[0.3, 0.7])?;
    let ok = r.sum_u_error < 1e-12 && r.sum_c_error < 1e-12 && r.rewrite_mismatches == 0 && r.formula_mismatches == 0;
    checks.push(check("extended closed forms", ok, &r));
    let r = stationarity(&extended_benchmark_config(Implementation::Naive, 1), 2_000_000)?;
    checks.push(check("extended chain TV", r.distance.total_variation < 0.02, &r));
    Ok(checks)
}

/// Convenience for callers that only need the pass flag and the JSON.
pub fn report_json(reports: &[SuiteReport]) -> Value {
    json!({
        "passed": reports.iter().all(|r| r.passed),
        "suites": reports,
    })
}
