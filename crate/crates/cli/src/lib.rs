//! Experiment harness around the `bundle_accel` solvers: configuration,
//! CSV and JSON persistence, parallel comparisons and offline verification
//! of recorded runs.

pub mod certify;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::{ConfigOverrides, ExperimentConfig};
pub use error::CliError;
