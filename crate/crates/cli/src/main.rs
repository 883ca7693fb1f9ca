//! `genbath`: run the flipped-vacuum-bath amplifier and write its ledger.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "genbath", version, about = "Generalized thermal baths and the vacuum-bath cavity amplifier")]
struct Cli {
    /// TOML run configuration; the flagship amplifier when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out_dir` from the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the configured representation and write timeseries.csv and
    /// summary.json.
    Simulate {
        /// Exit with status 4 if any acceptance check fails.
        #[arg(long)]
        check: bool,
    },
    /// Integrate both representations and write equivalence.json.
    VerifyEquivalence {
        #[arg(long)]
        check: bool,
    },
    /// Write the closed-form steady state to predictions.json.
    Predict,
    /// Write husimi_<t>.csv for each requested time (units of 1/gamma).
    Husimi {
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        times: Vec<f64>,
    },
    /// Run the acceptance suite and print one line per check.
    Check,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl From<genbath::Error> for CliError {
    fn from(e: genbath::Error) -> Self {
        use genbath::Error as E;
        match e {
            E::Config(_) | E::UnsupportedFrame(_) | E::TimeNotSampled(_) | E::InvalidRate(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

/// What a command that ran to completion found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Outputs were written but a sample breached a monitor threshold.
    Degraded,
    ChecksFailed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Degraded) => {
            eprintln!("numerical failure: a sample breached the trace or hermiticity monitor");
            ExitCode::from(3)
        }
        Ok(Outcome::ChecksFailed) => {
            eprintln!("acceptance checks failed");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
