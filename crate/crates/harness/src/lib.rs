//! Experiment harness for `aiit-core`: JSON configs, seed-parallel runs,
//! CSV output and the shipped fixtures. The `aiit` binary is a thin CLI over
//! this library.

pub mod config;
pub mod fixtures;
pub mod oracle;
pub mod output;
pub mod runner;

pub use config::{ConfigError, ExperimentConfig, Plan};
pub use runner::{run_plan, JobResult, RunOptions};
