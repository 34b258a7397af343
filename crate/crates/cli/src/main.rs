//! `arbfront`: ingest hourly prices, calibrate uncertainty models and build
//! risk–profit frontiers for a storage unit.
//!
//! Exit codes: 0 success, 2 data or config error, 3 degenerate calibration
//! (bundle still written), 4 solver failure.

mod commands;
mod config;

use std::process::ExitCode;

use arbfront::synthetic::{SyntheticConfig, DEFAULT_SEED};
use clap::{Parser, Subcommand};

use commands::Failure;
use config::{Overrides, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "arbfront", version, about = "Risk-averse storage arbitrage frontiers from hourly prices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse the price CSV into complete days and cache them.
    Ingest,
    /// Fit all models on the training years and calibrate budgets.
    Calibrate,
    /// Backtest every (strategy, Γ) cell on the test years.
    Frontier,
    /// Write a seeded synthetic price CSV to the data path.
    Synth {
        #[arg(long, default_value_t = 2018)]
        first_year: i32,
        #[arg(long, default_value_t = 2023)]
        last_year: i32,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

fn run(cli: Cli) -> commands::Outcome {
    let cfg = RunConfig::resolve(&cli.overrides).map_err(Failure::data)?;
    match cli.command {
        Command::Ingest => commands::ingest(&cfg),
        Command::Calibrate => commands::calibrate(&cfg),
        Command::Frontier => commands::frontier(&cfg),
        Command::Synth { first_year, last_year, seed } => {
            commands::synth(&cfg, &SyntheticConfig { first_year, last_year, seed })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
