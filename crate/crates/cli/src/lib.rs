//! The `symile` command line: dataset generation, training, evaluation,
//! probes, oracle queries, diagnostics and the accuracy/information sweep.

pub mod commands;
pub mod error;
pub mod files;
pub mod runconfig;
pub mod sweep;

use clap::{Parser, Subcommand};

pub use error::{CliError, CliResult};
pub use runconfig::{DatasetKind, DatasetSpec, RunConfig};
pub use sweep::SweepSpec;

#[derive(Debug, Parser)]
#[command(name = "symile", version, about = "Symile contrastive training and exact information oracle")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset file.
    Gen(commands::gen::GenArgs),
    /// Train one model from a run config.
    Train(commands::train::TrainArgs),
    /// Zero-shot classification accuracy of a checkpoint with bootstrap SE.
    Eval(commands::eval::EvalArgs),
    /// Linear probe on frozen element-wise products of representations.
    Probe(commands::probe::ProbeArgs),
    /// Exact MI, CMI and total correlation over a grid of mixture weights.
    Oracle(commands::oracle::OracleArgs),
    /// Numerical checks of the bound, the optimal scorer, gradients and calibration.
    Diagnose(commands::diagnose::DiagnoseArgs),
    /// Accuracy and information sweep over the mixture weight.
    #[command(name = "reproduce-fig3")]
    ReproduceFig3(commands::sweep::SweepArgs),
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Gen(a) => commands::gen::run(a),
        Command::Train(a) => commands::train::run(a),
        Command::Eval(a) => commands::eval::run(a),
        Command::Probe(a) => commands::probe::run(a),
        Command::Oracle(a) => commands::oracle::run(a),
        Command::Diagnose(a) => commands::diagnose::run(a),
        Command::ReproduceFig3(a) => commands::sweep::run(a),
    }
}
