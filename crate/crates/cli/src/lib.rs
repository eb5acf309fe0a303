//! Experiment runner: config loading, seeded Monte Carlo runs of the online
//! predictor against the Kalman baseline, and result summaries.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiment;
pub mod output;
pub mod summary;

pub use config::{load_config, parse_config, ExperimentConfig};
pub use error::CliError;
pub use experiment::{run_experiment, Experiment, RunRecord};
pub use summary::{summarize, Summary};
