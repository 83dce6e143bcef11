//! Experiment harness around `rmpe-core`: configuration files, seeded and
//! parallel runs, CSV/JSON output, audits and trace replay.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod runner;

pub use error::{CliError, CliResult};
