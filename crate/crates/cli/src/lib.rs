//! Experiment runner for the `ncd-opt` solvers: flat config files, seeded
//! replications on a worker pool, CSV traces and a pass-grid aggregate.

pub mod commands;
pub mod config;
pub mod error;
pub mod instance;
pub mod output;

pub use config::{Experiment, RawConfig};
pub use error::CliError;
