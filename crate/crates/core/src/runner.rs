//! Orchestration of one or more chains writing their output to disk.
//!
//! A single chain writes `stats.csv` and `snapshot-<step>.txt` directly in
//! the output directory; with several chains each gets a `chain-<i>`
//! subdirectory. `summary.json` always sits at the top level and holds no
//! timing, so identical manifests give byte-identical output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::mcmc::{Chain, ChainConfig, ChainStats, RunObserver, StepOutcome};
use crate::oracle::{boltzmann_target, distribution_distance, enumerate_states, Histogram, StateSpace};
use crate::state::{Snapshot, SystemState};

#[derive(Clone, Debug, PartialEq)]
pub struct RunManifest {
    pub config_path: PathBuf,
    pub config: ChainConfig,
    pub out_dir: PathBuf,
    /// One seed per chain, pairwise distinct.
    pub seeds: Vec<u64>,
    pub snapshot_every: Option<u64>,
    pub stats_every: Option<u64>,
    /// Compare each chain's empirical law with the target over the
    /// enumerated state space.
    pub oracle: bool,
}

impl RunManifest {
    /// Reads and validates the config. Chain `i` gets seed `base + i`, where
    /// `base` defaults to the config's seed.
    pub fn load(config_path: &Path, out_dir: &Path, chains: usize, seed: Option<u64>) -> Result<Self> {
        let text = fs::read_to_string(config_path).map_err(|e| {
            Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", config_path.display())))
        })?;
        let config = ChainConfig::from_json(&text)?;
        RunManifest::new(config_path, config, out_dir, chains, seed)
    }

    pub fn new(config_path: &Path, config: ChainConfig, out_dir: &Path, chains: usize, seed: Option<u64>) -> Result<Self> {
        if chains == 0 {
            return Err(Error::InvalidConfig("chain count must be at least 1".into()));
        }
        config.validate()?;
        let base = seed.unwrap_or(config.seed);
        let seeds = (0..chains as u64)
            .map(|i| base.checked_add(i).ok_or_else(|| Error::InvalidConfig("seed overflow".into())))
            .collect::<Result<Vec<_>>>()?;
        Ok(RunManifest {
            config_path: config_path.to_path_buf(),
            snapshot_every: config.snapshot_every,
            stats_every: config.stats_every,
            config,
            out_dir: out_dir.to_path_buf(),
            seeds,
            oracle: false,
        })
    }

    fn chain_dir(&self, i: usize) -> PathBuf {
        if self.seeds.len() == 1 {
            self.out_dir.clone()
        } else {
            self.out_dir.join(format!("chain-{i}"))
        }
    }

    /// The config a given chain runs with.
    pub fn chain_config(&self, i: usize) -> ChainConfig {
        let mut config = self.config.clone();
        config.seed = self.seeds[i];
        config.snapshot_every = self.snapshot_every;
        config.stats_every = self.stats_every;
        config
    }
}

/// Writes `contents` to a temporary sibling, then renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidConfig(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// The starting state: the config's snapshot file if it names one
/// (resolved against `base_dir` when relative), otherwise the boxed state.
pub fn initial_state(config: &ChainConfig, base_dir: &Path) -> Result<Option<SystemState>> {
    let Some(path) = &config.initial_snapshot else {
        return Ok(None);
    };
    let path = if path.is_relative() { base_dir.join(path) } else { path.clone() };
    let text = fs::read_to_string(&path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    let (lattice, state) = Snapshot::parse(&text)?.into_state()?;
    if lattice.config() != config.lattice {
        return Err(Error::InvalidConfig(format!(
            "{}: snapshot lattice differs from the configured one",
            path.display()
        )));
    }
    Ok(Some(state))
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainSummary {
    pub seed: u64,
    pub steps: u64,
    pub growth_successes: u64,
    pub growth_failures: u64,
    pub acceptances: u64,
    pub rejections: u64,
    pub construction_rate: f64,
    pub acceptance_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_variation: Option<f64>,
    pub final_state: String,
}

impl ChainSummary {
    fn new(seed: u64, stats: &ChainStats, total_variation: Option<f64>, final_state: String) -> Self {
        ChainSummary {
            seed,
            steps: stats.steps,
            growth_successes: stats.growth_successes,
            growth_failures: stats.growth_failures,
            acceptances: stats.acceptances,
            rejections: stats.rejections,
            construction_rate: stats.construction_rate(),
            acceptance_rate: stats.acceptance_rate(),
            total_variation,
            final_state,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub config: ChainConfig,
    pub chains: Vec<ChainSummary>,
    pub construction_rate: f64,
    pub acceptance_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_states: Option<usize>,
}

struct FileObserver<'a> {
    dir: PathBuf,
    csv: String,
    error: Option<Error>,
    histogram: Option<&'a mut Histogram>,
}

impl RunObserver for FileObserver<'_> {
    fn snapshot(&mut self, step: u64, lattice: &Lattice, state: &SystemState) {
        if self.error.is_some() {
            return;
        }
        let text = Snapshot::from_state(lattice, state).emit();
        if let Err(e) = write_atomic(&self.dir.join(format!("snapshot-{step}.txt")), text.as_bytes()) {
            self.error = Some(e);
        }
    }

    fn stats(&mut self, stats: &ChainStats) {
        self.csv.push_str(&stats.csv_row());
        self.csv.push('\n');
    }

    fn step(&mut self, _outcome: &StepOutcome, state: &SystemState) {
        if let Some(h) = self.histogram.as_deref_mut() {
            *h.entry(state.canonical_key()).or_insert(0) += 1;
        }
    }
}

fn run_chain(manifest: &RunManifest, i: usize, space: Option<&StateSpace>, target: Option<&[f64]>) -> Result<ChainSummary> {
    let config = manifest.chain_config(i);
    let base_dir = manifest.config_path.parent().unwrap_or(Path::new("."));
    let mut chain = match initial_state(&config, base_dir)? {
        Some(state) => Chain::from_state(config.clone(), state)?,
        None => Chain::new(config.clone())?,
    };
    let dir = manifest.chain_dir(i);
    fs::create_dir_all(&dir)?;
    let mut histogram = space.map(|_| Histogram::new());
    let mut observer = FileObserver {
        dir: dir.clone(),
        csv: format!("{}\n", ChainStats::CSV_HEADER),
        error: None,
        histogram: histogram.as_mut(),
    };
    chain.run_with(config.steps, &mut observer);
    if let Some(e) = observer.error {
        return Err(e);
    }
    write_atomic(&dir.join("stats.csv"), observer.csv.as_bytes())?;
    let stats = chain.stats().clone();
    tracing::info!(
        chain = i,
        seed = config.seed,
        steps = stats.steps,
        secs_per_step = stats.secs_per_step(),
        "chain finished"
    );
    let tv = match (space, target, &histogram) {
        (Some(space), Some(target), Some(h)) if stats.steps > 0 => {
            Some(distribution_distance(h, space, target)?.total_variation)
        }
        _ => None,
    };
    let final_state = Snapshot::from_state(chain.lattice(), chain.state()).emit();
    Ok(ChainSummary::new(config.seed, &stats, tv, final_state))
}

/// Runs every chain of the manifest on its own thread and writes all
/// output files.
pub fn execute(manifest: &RunManifest) -> Result<RunSummary> {
    fs::create_dir_all(&manifest.out_dir)?;
    let (space, target) = if manifest.oracle {
        let lengths = manifest.config.polymer_lengths()?;
        if lengths.iter().any(|&l| l != lengths[0]) {
            return Err(Error::InvalidConfig("the oracle needs equal polymer lengths".into()));
        }
        let lattice = Lattice::new(manifest.config.lattice)?;
        let space = enumerate_states(&lattice, manifest.config.n, lengths[0])?;
        let target = boltzmann_target(&space, &manifest.config.energy);
        (Some(space), Some(target))
    } else {
        (None, None)
    };
    let results: Vec<Result<ChainSummary>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..manifest.seeds.len())
            .map(|i| {
                let (space, target) = (space.as_ref(), target.as_deref());
                scope.spawn(move || run_chain(manifest, i, space, target))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::InvalidConfig("chain thread panicked".into()))))
            .collect()
    });
    let chains = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut total = ChainStats::default();
    for c in &chains {
        total.steps += c.steps;
        total.growth_successes += c.growth_successes;
        total.acceptances += c.acceptances;
    }
    let summary = RunSummary {
        config: manifest.config.clone(),
        construction_rate: total.construction_rate(),
        acceptance_rate: total.acceptance_rate(),
        oracle_states: space.as_ref().map(StateSpace::len),
        chains,
    };
    let mut json = serde_json::to_string_pretty(&summary)?;
    json.push('\n');
    write_atomic(&manifest.out_dir.join("summary.json"), json.as_bytes())?;
    Ok(summary)
}

/// One line per state of the enumerated space: polymers as vertex lists
/// separated by ` | `.
pub fn format_state_space(space: &StateSpace) -> String {
    let lattice = space.lattice().config();
    let mut out = format!(
        "# d={} a={} N={} L={} states={}\n",
        lattice.d,
        lattice.a,
        space.n(),
        space.length(),
        space.len()
    );
    for i in 0..space.len() {
        let parts: Vec<String> = space
            .polymers(i)
            .iter()
            .map(|c| c.vertices().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "))
            .collect();
        out.push_str(&parts.join(" | "));
        out.push('\n');
    }
    out
}

/// The state space of a uniform-length config.
pub fn enumerate_config(config: &ChainConfig) -> Result<StateSpace> {
    config.validate()?;
    let lengths = config.polymer_lengths()?;
    if lengths.iter().any(|&l| l != lengths[0]) {
        return Err(Error::InvalidConfig("enumeration needs equal polymer lengths".into()));
    }
    enumerate_states(&Lattice::new(config.lattice)?, config.n, lengths[0])
}
