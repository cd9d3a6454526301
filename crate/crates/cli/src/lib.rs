//! Command-line front end: configuration parsing, the `classify`,
//! `steady`, `unsteady`, `sweep` and `verify` commands, and their file
//! outputs.

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

pub use commands::{cmd_classify, cmd_steady, cmd_sweep, cmd_unsteady, cmd_verify, CommandError};
pub use config::{load_config, parse_config, ConfigError, ConfigErrors, RunConfig};
pub use output::RunSummary;
