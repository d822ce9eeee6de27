//! Scenario runner and acceptance harness for the `collapse-spectra` core.

pub mod config;
pub mod criteria;
pub mod error;
pub mod manifest;
pub mod output;
pub mod scenarios;
pub mod verify;

pub use error::{CliError, CliResult};
