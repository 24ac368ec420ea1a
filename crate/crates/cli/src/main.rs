//! Experiment runner: every verification pipeline as a subcommand with
//! seeded JSON configs, machine-readable outputs, and checksum manifests.
//!
//! Exit codes: 0 success/pass, 1 check failed, 2 config error, 3 missing
//! input, 4 incompatibility (e.g. mismatched projection seeds).

mod commands;
mod config;
mod manifest;

use std::fmt;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub enum CliError {
    CheckFailed(String),
    Config(String),
    MissingInput(String),
    Incompatible(String),
}

impl CliError {
    pub fn check_failed(msg: impl Into<String>) -> Self {
        CliError::CheckFailed(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn missing_input(msg: impl Into<String>) -> Self {
        CliError::MissingInput(msg.into())
    }

    pub fn incompatible(msg: impl Into<String>) -> Self {
        CliError::Incompatible(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::CheckFailed(_) => 1,
            CliError::Config(_) => 2,
            CliError::MissingInput(_) => 3,
            CliError::Incompatible(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::CheckFailed(m) => write!(f, "check failed: {m}"),
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::MissingInput(m) => write!(f, "missing input: {m}"),
            CliError::Incompatible(m) => write!(f, "incompatible inputs: {m}"),
        }
    }
}

impl From<driftlab::Error> for CliError {
    fn from(e: driftlab::Error) -> Self {
        match &e {
            driftlab::Error::SeedMismatch { .. } => CliError::Incompatible(e.to_string()),
            driftlab::Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound => {
                CliError::MissingInput(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Path to the JSON config.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (created if absent).
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Table format for consolidated reports.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Worker threads for sweeps (defaults to the rayon heuristic).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Replaces every seed in the config.
    #[arg(long)]
    pub seed_override: Option<u64>,
}

impl RunArgs {
    pub fn read_config_bytes(&self) -> Result<Vec<u8>, CliError> {
        fs::read(&self.config).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                CliError::missing_input(format!("config {}", self.config.display()))
            } else {
                CliError::config(format!("cannot read config: {e}"))
            }
        })
    }

    pub fn parse_config<T: serde::de::DeserializeOwned>(
        &self,
        bytes: &[u8],
    ) -> Result<T, CliError> {
        serde_json::from_slice(bytes)
            .map_err(|e| CliError::config(format!("{}: {e}", self.config.display())))
    }
}

#[derive(Parser)]
#[command(
    name = "driftlab",
    version,
    about = "Gradient-flow drift and Fisher-geometry experiment runner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a seeded instability instance and verify its certificate.
    AicVerify(RunArgs),
    /// Integrate a gradient flow; export drift/loss curves and scaling fits.
    Flow(RunArgs),
    /// Monte Carlo verification of the flat-geometry null model.
    Nullmodel(RunArgs),
    /// Exact toy-policy checks: KL identity, Fisher-Hessian, remainders.
    PolicySuite(RunArgs),
    /// Sketched-Fisher spectrum, rank bound, and Overlap Scores.
    Sketch(RunArgs),
    /// Consolidate fits and summaries across prior runs.
    Report(RunArgs),
}

fn init_threads(args: &RunArgs) {
    if let Some(threads) = args.threads {
        // ignore failure when a pool already exists (tests call run twice)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::AicVerify(args) => {
            init_threads(&args);
            commands::aic_verify::run(&args)
        }
        Command::Flow(args) => {
            init_threads(&args);
            commands::flow::run(&args)
        }
        Command::Nullmodel(args) => {
            init_threads(&args);
            commands::nullmodel::run(&args)
        }
        Command::PolicySuite(args) => {
            init_threads(&args);
            commands::policy_suite::run(&args)
        }
        Command::Sketch(args) => {
            init_threads(&args);
            commands::sketch::run(&args)
        }
        Command::Report(args) => {
            init_threads(&args);
            commands::report::run(&args)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("driftlab: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
