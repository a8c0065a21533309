//! The RG* Markov chain.
//!
//! One step draws, from the chain's single random stream and in this order:
//! the index of the polymer to remove; the root and out-edges of the new
//! underlying graph together with the growth choices (interleaved in the
//! entangled implementation, graph first in the naive one); the orientation
//! and free out-edges of the graph compatible with the removed polymer; any
//! out-edges still missing when weights are evaluated; and finally the
//! acceptance coin. Growth failures skip everything after the growth.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{Energy, EnergyModel};
use crate::entangled::LazyGraph;
use crate::error::{Error, Result};
use crate::graph::{generate, generate_compatible, DegreeMode};
use crate::growth::{grow, weight, weight_w0, EdgeSource, Weight};
use crate::lattice::{Lattice, LatticeConfig};
use crate::state::{boxed_initial_state_with_lengths, Occupancy, Polymer, SystemState};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Implementation {
    /// Generate the whole underlying graph, then grow on it.
    Naive,
    /// Draw out-edges only where growth and weights look.
    #[default]
    Entangled,
}

/// Parameters of one chain, read from a JSON document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub lattice: LatticeConfig,
    #[serde(rename = "N")]
    pub n: usize,
    /// Common polymer length. Exactly one of `L` and `lengths` is given.
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub length: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lengths: Option<Vec<usize>>,
    pub mode: DegreeMode,
    pub ell: usize,
    #[serde(default)]
    pub energy: EnergyModel,
    #[serde(default)]
    pub steps: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats_every: Option<u64>,
    #[serde(default)]
    pub implementation: Implementation,
    /// Snapshot file to start from instead of the boxed state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_snapshot: Option<PathBuf>,
}

impl ChainConfig {
    /// A config with uniform lengths, uniform energy and default cadence.
    pub fn new(lattice: LatticeConfig, n: usize, length: usize, mode: DegreeMode, ell: usize) -> Self {
        ChainConfig {
            lattice,
            n,
            length: Some(length),
            lengths: None,
            mode,
            ell,
            energy: EnergyModel::Uniform,
            steps: 0,
            seed: 0,
            snapshot_every: None,
            stats_every: None,
            implementation: Implementation::Entangled,
            initial_snapshot: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: ChainConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Per-polymer lengths.
    pub fn polymer_lengths(&self) -> Result<Vec<usize>> {
        match (&self.length, &self.lengths) {
            (Some(l), None) => Ok(vec![*l; self.n]),
            (None, Some(ls)) if ls.len() == self.n => Ok(ls.clone()),
            (None, Some(ls)) => Err(Error::InvalidConfig(format!(
                "{} lengths given for N = {}",
                ls.len(),
                self.n
            ))),
            _ => Err(Error::InvalidConfig(
                "exactly one of `L` and `lengths` must be given".into(),
            )),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.lattice.validate()?;
        if self.n == 0 {
            return Err(Error::InvalidConfig("N must be at least 1".into()));
        }
        let lengths = self.polymer_lengths()?;
        if let Some(&bad) = lengths.iter().find(|&&l| l < 2) {
            return Err(Error::InvalidConfig(format!("polymer length {bad} is below 2")));
        }
        let longest = *lengths.iter().max().expect("N >= 1");
        if self.ell > longest {
            return Err(Error::InvalidConfig(format!(
                "feeler length {} exceeds polymer length {longest}",
                self.ell
            )));
        }
        self.mode.validate(self.lattice.q())?;
        let total: usize = lengths.iter().sum();
        let vertices = self.lattice.a.pow(self.lattice.d as u32);
        if total > vertices {
            return Err(Error::Infeasible(format!(
                "{total} monomers do not fit on {vertices} vertices"
            )));
        }
        if let EnergyModel::Contact { epsilon } = self.energy {
            if !epsilon.is_finite() {
                return Err(Error::InvalidConfig("contact epsilon must be finite".into()));
            }
        }
        if self.snapshot_every == Some(0) || self.stats_every == Some(0) {
            return Err(Error::InvalidConfig("cadences must be positive".into()));
        }
        Ok(())
    }
}

/// `min(1, q_ratio * W_n / W_o)`, or with `w0 = Some((W0_n, W0_o))`
/// `min(1, q_ratio * (W_n / W0_n) / (W_o / W0_o))`. The weight ratio is
/// formed exactly before rounding.
pub fn acceptance_probability(
    q_ratio: f64,
    w_new: &Weight,
    w_old: &Weight,
    w0: Option<(&Weight, &Weight)>,
) -> f64 {
    let mut num = BigInt::from(w_new.value());
    let mut den = BigInt::from(w_old.value());
    if let Some((w0_new, w0_old)) = w0 {
        num *= BigInt::from(w0_old.value());
        den *= BigInt::from(w0_new.value());
    }
    let ratio = BigRational::new(num, den).to_f64().unwrap_or(f64::INFINITY);
    (q_ratio * ratio).min(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    GrowthFailed,
    Rejected,
    Accepted,
}

/// Vertices given out-edges by the lazy graphs of one step, next to the
/// sizes of the same graphs once generation is finished.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LazinessAudit {
    pub new_assigned: usize,
    pub new_completed: usize,
    pub old_assigned: usize,
    pub old_completed: usize,
}

impl LazinessAudit {
    pub fn within_bounds(&self) -> bool {
        self.new_assigned <= self.new_completed && self.old_assigned <= self.old_completed
    }
}

#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub kind: StepKind,
    /// Slot of the removed polymer.
    pub removed: usize,
    pub candidate: Option<Polymer>,
    pub w_new: Option<Weight>,
    pub w_old: Option<Weight>,
    pub w0_new: Option<Weight>,
    pub w0_old: Option<Weight>,
    pub acceptance: Option<f64>,
    /// Filled by the entangled implementation when auditing is enabled.
    pub audit: Option<LazinessAudit>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ChainStats {
    pub steps: u64,
    pub growth_successes: u64,
    pub growth_failures: u64,
    pub acceptances: u64,
    pub rejections: u64,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl ChainStats {
    pub fn construction_rate(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.growth_successes as f64 / self.steps as f64
        }
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.growth_successes == 0 {
            0.0
        } else {
            self.acceptances as f64 / self.growth_successes as f64
        }
    }

    pub fn secs_per_step(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.elapsed.as_secs_f64() / self.steps as f64
        }
    }

    pub fn record(&mut self, kind: StepKind) {
        self.steps += 1;
        match kind {
            StepKind::GrowthFailed => self.growth_failures += 1,
            StepKind::Rejected => {
                self.growth_successes += 1;
                self.rejections += 1;
            }
            StepKind::Accepted => {
                self.growth_successes += 1;
                self.acceptances += 1;
            }
        }
    }

    /// Combined counters of several chains.
    pub fn merged<'a>(all: impl IntoIterator<Item = &'a ChainStats>) -> ChainStats {
        let mut total = ChainStats::default();
        for s in all {
            total.steps += s.steps;
            total.growth_successes += s.growth_successes;
            total.growth_failures += s.growth_failures;
            total.acceptances += s.acceptances;
            total.rejections += s.rejections;
            total.elapsed += s.elapsed;
        }
        total
    }

    pub const CSV_HEADER: &'static str =
        "step,growth_failures,rejections,acceptances,construction_rate,acceptance_rate";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.steps,
            self.growth_failures,
            self.rejections,
            self.acceptances,
            self.construction_rate(),
            self.acceptance_rate()
        )
    }
}

/// Callbacks for [`Chain::run_with`].
pub trait RunObserver {
    fn snapshot(&mut self, _step: u64, _lattice: &Lattice, _state: &SystemState) {}
    fn stats(&mut self, _stats: &ChainStats) {}
    fn step(&mut self, _outcome: &StepOutcome, _state: &SystemState) {}
}

impl RunObserver for () {}

/// A running chain: configuration, current state and random stream.
pub struct Chain<E = EnergyModel> {
    config: ChainConfig,
    lattice: Lattice,
    energy: E,
    state: SystemState,
    rng: ChaCha8Rng,
    audit_rng: Option<ChaCha8Rng>,
    stats: ChainStats,
}

impl Chain<EnergyModel> {
    /// Starts from the boxed state.
    pub fn new(config: ChainConfig) -> Result<Self> {
        config.validate()?;
        let lattice = Lattice::new(config.lattice)?;
        let state = boxed_initial_state_with_lengths(&lattice, &config.polymer_lengths()?)?;
        Chain::from_state(config, state)
    }

    pub fn from_state(config: ChainConfig, state: SystemState) -> Result<Self> {
        let energy = config.energy;
        Chain::with_energy(config, state, energy)
    }
}

impl<E: Energy> Chain<E> {
    pub fn with_energy(config: ChainConfig, state: SystemState, energy: E) -> Result<Self> {
        config.validate()?;
        let lattice = Lattice::new(config.lattice)?;
        state
            .validate(&lattice)
            .map_err(|v| Error::InvalidConfig(format!("initial state: {v}")))?;
        let mut want = config.polymer_lengths()?;
        let mut have = state.lengths();
        want.sort_unstable();
        have.sort_unstable();
        if want != have || state.polymer_count() != state.slot_count() {
            return Err(Error::InvalidConfig(
                "initial state does not match the configured polymer lengths".into(),
            ));
        }
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Chain {
            config,
            lattice,
            energy,
            state,
            rng,
            audit_rng: None,
            stats: ChainStats::default(),
        })
    }

    /// Records, on every entangled step, how many vertices the lazy graphs
    /// assigned against the size of the finished graphs. Finishing uses a
    /// separate stream, so the trajectory is unchanged.
    pub fn enable_audit(&mut self, seed: u64) {
        self.audit_rng = Some(ChaCha8Rng::seed_from_u64(seed));
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn state(&self) -> &SystemState {
        &self.state
    }

    pub fn into_state(self) -> SystemState {
        self.state
    }

    pub fn stats(&self) -> &ChainStats {
        &self.stats
    }

    pub fn step(&mut self) -> StepOutcome {
        let started = Instant::now();
        let outcome = self.step_inner();
        self.stats.record(outcome.kind);
        self.stats.elapsed += started.elapsed();
        outcome
    }

    fn step_inner(&mut self) -> StepOutcome {
        let Chain {
            config,
            lattice,
            energy,
            state,
            rng,
            audit_rng,
            ..
        } = self;
        let slot = rng.gen_range(0..state.slot_count());
        let old = state.remove_polymer(slot).expect("every slot is filled");
        let length = old.len();
        let ell = config.ell;
        let extended = matches!(config.mode, DegreeMode::Extended(_));
        let mut audit = audit_rng.as_ref().map(|_| LazinessAudit::default());

        let occ = state.occupancy();
        let grown = match config.implementation {
            Implementation::Naive => {
                let mut g = generate(lattice, occ, &config.mode, rng)
                    .expect("removing a polymer frees its vertices");
                grow_and_weigh(&mut g, occ, length, ell, extended, rng)
            }
            Implementation::Entangled => {
                let root = crate::graph::random_free_vertex(occ, rng)
                    .expect("removing a polymer frees its vertices");
                let mut lazy = LazyGraph::rooted_at(lattice, &config.mode, root);
                let grown = grow_and_weigh(&mut lazy, occ, length, ell, extended, rng);
                if let (Some(a), Some(arng)) = (audit.as_mut(), audit_rng.as_mut()) {
                    a.new_assigned = lazy.assigned();
                    a.new_completed = lazy.complete(arng).size();
                }
                grown
            }
        };

        let Some((candidate, w_new, w0_new)) = grown else {
            state.insert_polymer(old).expect("restoring the removed polymer");
            return StepOutcome {
                kind: StepKind::GrowthFailed,
                removed: slot,
                candidate: None,
                w_new: None,
                w_old: None,
                w0_new: None,
                w0_old: None,
                acceptance: None,
                audit,
            };
        };

        let (w_old, w0_old) = match config.implementation {
            Implementation::Naive => {
                let mut g = generate_compatible(lattice, &old, &config.mode, rng);
                weigh(&mut g, occ, &old, ell, extended, rng)
            }
            Implementation::Entangled => {
                let mut lazy = LazyGraph::compatible(lattice, &config.mode, &old, rng);
                let w = weigh(&mut lazy, occ, &old, ell, extended, rng);
                if let (Some(a), Some(arng)) = (audit.as_mut(), audit_rng.as_mut()) {
                    a.old_assigned = lazy.assigned();
                    a.old_completed = lazy.complete(arng).size();
                }
                w
            }
        };

        let q_ratio = energy.ln_q_ratio(lattice, state, &old, &candidate).exp();
        let w0 = w0_new.as_ref().zip(w0_old.as_ref());
        let p = acceptance_probability(q_ratio, &w_new, &w_old, w0);
        let accept = rng.gen::<f64>() < p;
        let kind = if accept {
            state.insert_polymer(candidate.clone()).expect("candidate avoids the others");
            StepKind::Accepted
        } else {
            state.insert_polymer(old).expect("restoring the removed polymer");
            StepKind::Rejected
        };
        StepOutcome {
            kind,
            removed: slot,
            candidate: Some(candidate),
            w_new: Some(w_new),
            w_old: Some(w_old),
            w0_new,
            w0_old,
            acceptance: Some(p),
            audit,
        }
    }

    /// Runs `steps` steps, reporting snapshots and stats at the configured
    /// cadence. Step 0 and the last step are always reported.
    pub fn run_with<O: RunObserver>(&mut self, steps: u64, observer: &mut O) {
        let start = self.stats.steps;
        let end = start + steps;
        let snap = self.config.snapshot_every;
        let stat = self.config.stats_every;
        let due = |every: Option<u64>, step: u64| every.is_some_and(|e| step % e == 0);
        observer.snapshot(start, &self.lattice, &self.state);
        observer.stats(&self.stats);
        while self.stats.steps < end {
            let outcome = self.step();
            observer.step(&outcome, &self.state);
            let t = self.stats.steps;
            if due(snap, t) || (t == end && !due(snap, t)) {
                observer.snapshot(t, &self.lattice, &self.state);
            }
            if due(stat, t) || t == end {
                observer.stats(&self.stats);
            }
        }
    }
}

/// Grows on `source` and, on success, evaluates the candidate's weights.
fn grow_and_weigh<S: EdgeSource, R: Rng + ?Sized>(
    source: &mut S,
    occupancy: &Occupancy,
    length: usize,
    ell: usize,
    extended: bool,
    rng: &mut R,
) -> Option<(Polymer, Weight, Option<Weight>)> {
    let result = grow(source, occupancy, length, ell, rng).expect("root is free");
    let candidate = result.into_polymer()?;
    let (w, w0) = weigh(source, occupancy, &candidate, ell, extended, rng);
    Some((candidate, w, w0))
}

fn weigh<S: EdgeSource, R: Rng + ?Sized>(
    source: &mut S,
    occupancy: &Occupancy,
    c: &Polymer,
    ell: usize,
    extended: bool,
    rng: &mut R,
) -> (Weight, Option<Weight>) {
    let w = weight(source, occupancy, c, ell, rng).expect("compatible by construction");
    let w0 = extended.then(|| weight_w0(source, c, rng).expect("compatible by construction"));
    (w, w0)
}

/// Everything a collected run produced.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub final_state: SystemState,
    pub stats: ChainStats,
    pub snapshots: Vec<(u64, SystemState)>,
    pub stats_rows: Vec<ChainStats>,
}

#[derive(Default)]
struct Collector {
    snapshots: Vec<(u64, SystemState)>,
    stats_rows: Vec<ChainStats>,
}

impl RunObserver for Collector {
    fn snapshot(&mut self, step: u64, _lattice: &Lattice, state: &SystemState) {
        self.snapshots.push((step, state.clone()));
    }

    fn stats(&mut self, stats: &ChainStats) {
        self.stats_rows.push(stats.clone());
    }
}

/// Runs `config.steps` steps from the boxed state and keeps all output in
/// memory.
pub fn run(config: &ChainConfig) -> Result<RunOutput> {
    let mut chain = Chain::new(config.clone())?;
    let mut collector = Collector::default();
    chain.run_with(config.steps, &mut collector);
    Ok(RunOutput {
        stats: chain.stats().clone(),
        final_state: chain.into_state(),
        snapshots: collector.snapshots,
        stats_rows: collector.stats_rows,
    })
}
