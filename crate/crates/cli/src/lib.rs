//! Command-line front end: JSON configuration, flag overrides, subcommand dispatch and
//! deterministic CSV/JSON artifacts.

pub mod app;
pub mod checks;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
