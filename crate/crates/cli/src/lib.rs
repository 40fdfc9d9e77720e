//! Experiment driver: flat JSON configs, one subcommand per module, and
//! reproducible `report.json` / `metrics.csv` outputs.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use commands::{execute, execute_with_threads};
pub use config::{Command, ExperimentConfig};
pub use error::CliError;
pub use report::{Outcome, RunReport};
