//! Command-line driver for the `holomem` simulator: JSON configs in,
//! deterministic JSON and CSV out.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::{Experiment, RunConfig};
pub use error::CliError;
