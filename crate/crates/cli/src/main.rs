//! `bariance` command-line tool.

mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::output::Format;

#[derive(Debug, Parser)]
#[command(
    name = "bariance",
    version,
    about = "Bariance estimators, simulations and benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Write to this file instead of stdout. Relative paths resolve against
    /// $BARIANCE_OUTPUT_DIR when it is set.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the variance estimators on a single sample.
    Estimate(commands::EstimateArgs),
    /// Monte Carlo bias, variance and MSE of the estimators.
    Simulate(commands::SimulateArgs),
    /// Empirical and closed-form MSE over a grid of denominators.
    MseSweep(commands::SweepArgs),
    /// Check that naive and optimized Bariance agree on simulated data.
    Equivalence(commands::EquivalenceArgs),
    /// Time the estimators across sample sizes.
    Bench(commands::BenchArgs),
    /// Fixed-effects regression of benchmark timings.
    Regress(commands::RegressArgs),
    /// Closed-form moments of Σ(Xᵢ − X̄)²/a under normal sampling.
    Theory(commands::TheoryArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Estimate(a) => commands::estimate(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::MseSweep(a) => commands::mse_sweep(a),
        Command::Equivalence(a) => commands::equivalence(a),
        Command::Bench(a) => commands::bench(a),
        Command::Regress(a) => commands::regress(a),
        Command::Theory(a) => commands::theory(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
