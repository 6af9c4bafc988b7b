//! Experiment harness: dataset generation, bound tables, Rademacher
//! estimates, estimate-vs-bound comparison, CD-1 training audits and the
//! verification suites. Each subcommand of `rbmc` is a function here.

pub mod commands;
pub mod config;
pub mod error;
pub mod verify;

pub use config::{DataSource, ExperimentConfig};
pub use error::{CliError, CliResult};
