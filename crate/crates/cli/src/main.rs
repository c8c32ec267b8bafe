//! `sbmgrowth` command-line tool.
//!
//! Exit codes: 0 success, 1 validation/configuration error, 2 an enforced
//! verification check failed, 3 runtime limit hit (population cap).

mod commands;
mod config;

use clap::{Parser, Subcommand};
use config::{CommandKind, FileConfig, Overrides};
use std::path::PathBuf;
use std::process::ExitCode;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0} enforced verification check(s) failed")]
    CheckFailure(usize),
    #[error("{0}")]
    RuntimeLimit(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 1,
            CliError::CheckFailure(_) => 2,
            CliError::RuntimeLimit(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "sbmgrowth",
    version,
    about = "Two-community weighted graph growth: simulate trajectories, analyze the deterministic map, sweep phases, verify expectations"
)]
struct Cli {
    /// JSON configuration file; omitted fields take documented defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory (default: `out/<subcommand>`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Master seed; every trial derives its own stream from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Number of independent trials.
    #[arg(long, global = true)]
    trials: Option<usize>,

    /// Worker threads (default: all available CPUs). Affects wall time
    /// only, never results.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Run stochastic growth trajectories; write per-trial CSVs + summary.
    Simulate,
    /// Deterministic map: trajectory, f/f' curve grid, stability report.
    Detmap,
    /// Classify the phase over a (rho, lambda) grid into phase.csv.
    Sweep,
    /// Run the verification suite; nonzero exit if an enforced check fails.
    Verify,
}

impl Cmd {
    fn kind(self) -> CommandKind {
        match self {
            Cmd::Simulate => CommandKind::Simulate,
            Cmd::Detmap => CommandKind::Detmap,
            Cmd::Sweep => CommandKind::Sweep,
            Cmd::Verify => CommandKind::Verify,
        }
    }

    fn default_out(self) -> &'static str {
        match self {
            Cmd::Simulate => "out/simulate",
            Cmd::Detmap => "out/detmap",
            Cmd::Sweep => "out/sweep",
            Cmd::Verify => "out/verify",
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file_cfg = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let overrides = Overrides {
        seed: cli.seed,
        trials: cli.trials,
        threads: cli.threads,
    };
    let cfg = file_cfg.resolve(cli.command.kind(), overrides)?;

    if cfg.threads > 0 {
        // Ignore the error if a pool already exists (e.g. repeated calls
        // in tests); the pool size never changes results.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global();
    }

    let out = cli
        .out
        .unwrap_or_else(|| PathBuf::from(cli.command.default_out()));
    match cli.command {
        Cmd::Simulate => commands::cmd_simulate(&cfg, &out),
        Cmd::Detmap => commands::cmd_detmap(&cfg, &out),
        Cmd::Sweep => commands::cmd_sweep(&cfg, &out),
        Cmd::Verify => commands::cmd_verify(&cfg, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
