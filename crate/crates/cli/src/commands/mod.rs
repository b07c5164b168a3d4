use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use strate::simulation::ExperimentConfig;

mod oracle_check;
mod report;
mod run;
mod sweep;

/// Stratified-sampling active-learning simulator.
#[derive(Debug, Parser)]
#[command(name = "strate", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment and write report.json / summary.csv /
    /// histogram.csv / manifest.json.
    Run(RunArgs),
    /// Run a cartesian grid of experiments (axes: n_init, noise_sigma,
    /// miscalibration_gamma, strategy) with per-point outputs + sweep.csv.
    Sweep(SweepArgs),
    /// Enumerate all stratified draws on built-in tiny populations and
    /// verify estimator bias and variance against exact references.
    OracleCheck(OracleCheckArgs),
    /// Print a human-readable summary of an existing report.json.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Override the experiment seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the replication count.
    #[arg(long)]
    pub replications: Option<usize>,
    /// Cap replication parallelism (default: machine parallelism).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Sweep configuration (JSON: {"base": <experiment>, "axes": {...}}).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (one subdirectory per grid point).
    #[arg(long)]
    pub out: PathBuf,
    /// Override the experiment seed (shared across grid points).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the replication count.
    #[arg(long)]
    pub replications: Option<usize>,
    /// Cap replication parallelism.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OracleCheckArgs {}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory containing report.json (as written by `run`).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration: exit code 2.
    Config(String),
    /// Runtime failure: exit code 1.
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(err: anyhow::Error) -> Self {
        CliError::Runtime(err)
    }
}

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => run::execute(args),
        Command::Sweep(args) => sweep::execute(args),
        Command::OracleCheck(args) => oracle_check::execute(args),
        Command::Report(args) => report::execute(args),
    }
}

/// Parse and validate an experiment config; all failures are config errors
/// (exit code 2) with serde's line/column in the message.
pub(crate) fn load_experiment_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let cfg: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    cfg.validate()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(cfg)
}

pub(crate) fn configure_threads(threads: Option<usize>) {
    if let Some(t) = threads {
        // Only the first global-pool build wins; later calls are no-ops.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global();
    }
}
