//! Command-line front end for `wormline-core`: run configuration, unit
//! parsing, CSV/JSON emitters and the subcommands behind the `wormline`
//! binary.

pub mod cli;
pub mod commands;
pub mod config;
pub mod table;
pub mod units;

pub use commands::{CliError, Outcome, Run};
pub use config::{load, reference_preset, ConfigError, RunConfig};
