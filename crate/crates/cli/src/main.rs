//! `epiflow`: run gradient-flow simulations and certificate suites from JSON
//! configs.
//!
//! Exit codes: 0 all certificates pass, 1 a certificate failed, 2 bad config
//! or input, 3 runtime abort (partial outputs are flagged in `report.json`).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

mod commands;
mod config;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("runtime abort: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(name = "epiflow", version, about = "Gradient-flow solver for the nonlocal epitaxial energy")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one config and write trajectory.csv, checkpoints/ and report.json.
    Run { config: PathBuf },
    /// Stateless identity, convexity and quadrature checks (no time stepping).
    Check { config: PathBuf },
    /// Print the energy report of a checkpoint file as JSON.
    Energy { checkpoint: PathBuf },
    /// Run every *.json config in a directory in parallel.
    Sweep { dir: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Run { config } => commands::run(config),
        Command::Check { config } => commands::check(config),
        Command::Energy { checkpoint } => commands::energy_of(checkpoint),
        Command::Sweep { dir } => commands::sweep(dir),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
