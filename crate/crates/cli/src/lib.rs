//! Command-line front end for the `tempora` SICA simulator and analyzer.
//!
//! Exit codes are `0` on success (certificate holds), `1` on input errors and `2`
//! when the stability certificate fails.

pub mod audit;
pub mod commands;
pub mod config;
pub mod report;
pub mod svg;

pub use commands::{CliError, Outcome, EXIT_CERTIFICATE, EXIT_INPUT, EXIT_OK};
pub use config::{ConfigError, ModeConfig, RunConfig};
