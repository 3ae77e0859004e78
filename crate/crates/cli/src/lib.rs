//! Library side of the `fleet-anomaly` command-line tool.
//!
//! Every subcommand is a plain function in [`commands`] so it can be driven
//! from tests and scripts as well as from the binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

pub use error::{CliError, ErrorCode};
