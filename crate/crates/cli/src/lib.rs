//! Command-line front end for the dissipative-mode toolkit.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod plot;

pub use config::{CommandKind, RunConfig};
pub use error::{CliError, Result};
