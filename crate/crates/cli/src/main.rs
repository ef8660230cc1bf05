mod commands;
mod source;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use klb_core::oracle::{DEFAULT_CEILING, DEFAULT_MAX_LEN, DEFAULT_STEPS};
use klb_core::KlbError;
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "klb", version, about = "Resource-bounded complexity laboratory")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Global {
    /// Seed for every randomized step (required where randomness is used).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Length cap L of the program search.
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_LEN)]
    pub max_len: usize,
    /// Step budget t per program run.
    #[arg(long, global = true, default_value_t = DEFAULT_STEPS)]
    pub steps: u64,
    /// Maximum number of programs one search may enumerate.
    #[arg(long, global = true, default_value_t = DEFAULT_CEILING)]
    pub ceiling: u64,
    /// Sequence horizon (required by sequence commands).
    #[arg(long, global = true)]
    pub horizon: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Exact C_t(target | cond) relative to an oracle string.
    Complexity(commands::ComplexityArgs),
    /// Prefix dependency matrix of two sources, CSV.
    DepMatrix(commands::DepMatrixArgs),
    /// c-independence of a string tuple, JSON.
    TupleIndep(commands::TupleIndepArgs),
    /// Search for a coloring that passes the rectangle audit.
    ColorFind(commands::ColorFindArgs),
    /// Audit a saved coloring.
    ColorVerify(commands::ColorVerifyArgs),
    /// Apply a saved coloring to three n-bit strings.
    Extract(commands::ExtractArgs),
    /// Measure the extraction claim on one triple.
    Certify(commands::CertifyArgs),
    /// Estimator cost profile and dimension estimate of a source, CSV.
    DimEst(commands::DimEstArgs),
    /// Convergence-modulus reconstruction on the toy enumerators, CSV.
    DemoCe(commands::DemoCeArgs),
    /// Conditional cost of x XOR y given the interleaving, CSV.
    DemoXor(commands::DemoXorArgs),
    /// Run a built-in reduction and report its use, CSV.
    ReduceRun(commands::ReduceRunArgs),
    /// Re-measure the calibration record.
    Calibrate,
    /// Feasibility bound of the probabilistic construction, JSON.
    Bound(commands::BoundArgs),
}

/// Failures the CLI maps to exit codes.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(KlbError),
    SearchFailed(String),
}

impl From<KlbError> for CliError {
    fn from(e: KlbError) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::SearchFailed(_) => 4,
            CliError::Core(e) => match e {
                KlbError::CapExceeded { .. }
                | KlbError::AuditCeilingExceeded { .. }
                | KlbError::StageBudgetExhausted { .. } => 3,
                KlbError::NoProgramWithinCap { .. } => 4,
                KlbError::Io(_) => 1,
                _ => 2,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Config(m) => format!("config error: {m}"),
            CliError::SearchFailed(m) => format!("search failed: {m}"),
            CliError::Core(e) => e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("klb: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
