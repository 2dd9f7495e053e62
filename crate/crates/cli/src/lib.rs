//! Experiment harness for the `heisenberg-tm` library: every pipeline as a
//! subcommand with a JSON config, CSV and JSON outputs, and exit codes
//! 0 (pass), 2 (invariant failure), 3 (config error), 4 (non-convergence).

// `!(x > 0.0)` is the idiom used to reject NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

use serde::Serialize;

pub use config::{ExperimentConfig, Overrides};
pub use error::{CliError, CliResult};
use report::Outcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    GeometryCheck,
    Covering,
    CutoffCheck,
    Functional,
    MoserScan,
    Glue,
}

fn finish<R: Serialize>(outcome: Outcome<R>, config: &ExperimentConfig) -> CliResult<()> {
    outcome.print();
    outcome.write(config)?;
    outcome.status()
}

/// Runs one subcommand, prints its verdicts and writes its outputs.
pub fn execute(command: Command, config: &ExperimentConfig) -> CliResult<()> {
    match command {
        Command::GeometryCheck => finish(commands::geometry::run(config)?, config),
        Command::Covering => finish(commands::covering::run(config)?, config),
        Command::CutoffCheck => finish(commands::cutoff::run(config)?, config),
        Command::Functional => finish(commands::functional::run(config)?, config),
        Command::MoserScan => finish(commands::moser::run(config)?, config),
        Command::Glue => finish(commands::glue::run(config)?, config),
    }
}
