use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use rgstar::runner::{enumerate_config, execute, format_state_space, RunManifest};
use rgstar::verify::{report_json, run_all, run_suite, SUITES};
use rgstar::{ChainConfig, Error};
use tracing_subscriber::EnvFilter;

/// Recoil-growth Monte Carlo for dense polymer systems on a torus.
///
/// Log verbosity is read from RGSTAR_LOG (for example `RGSTAR_LOG=info`).
#[derive(Parser)]
#[command(name = "rgstar", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more chains and write stats, snapshots and a summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        chains: usize,
        /// Base seed; chain i uses seed + i. Defaults to the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Report the total variation against the target over the
        /// enumerated state space.
        #[arg(long)]
        oracle: bool,
    },
    /// Run a named oracle suite and print a JSON report.
    Verify {
        /// One of graphs, growth, balance, stationarity, irreducibility,
        /// entangled, extended, all.
        suite: String,
    },
    /// Print the enumerated state space of a config.
    Enumerate {
        #[arg(long)]
        config: PathBuf,
    },
}

const USAGE_ERROR: u8 = 2;

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_env("RGSTAR_LOG").unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::Io(_) | Error::Json(_) | Error::InvalidConfig(_) | Error::Parse { .. }) => USAGE_ERROR,
        _ => 1,
    }
}

fn load_config(path: &PathBuf) -> anyhow::Result<ChainConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("cannot read config {}: {e}", path.display()))))?;
    ChainConfig::from_json(&text)
        .map_err(anyhow::Error::from)
        .with_context(|| format!("in config {}", path.display()))
}

fn dispatch(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Run { config, out, chains, seed, oracle } => {
            let chain_config = load_config(&config)?;
            let mut manifest = RunManifest::new(&config, chain_config, &out, chains, seed)?;
            manifest.oracle = oracle;
            let summary = execute(&manifest)?;
            println!(
                "{} chain(s), construction rate {:.4}, acceptance rate {:.4}",
                summary.chains.len(),
                summary.construction_rate,
                summary.acceptance_rate
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { suite } => {
            let reports = if suite == "all" {
                run_all()?
            } else if SUITES.contains(&suite.as_str()) {
                vec![run_suite(&suite)?]
            } else {
                eprintln!("error: unknown suite `{suite}`; expected one of {}, all", SUITES.join(", "));
                return Ok(ExitCode::from(USAGE_ERROR));
            };
            let report = report_json(&reports);
            println!("{}", serde_json::to_string_pretty(&report)?);
            let passed = reports.iter().all(|r| r.passed);
            Ok(if passed { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Enumerate { config } => {
            let chain_config = load_config(&config)?;
            print!("{}", format_state_space(&enumerate_config(&chain_config)?));
            Ok(ExitCode::SUCCESS)
        }
    }
}
