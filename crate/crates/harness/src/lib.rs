//! Experiment runner for `lowrank-bandit`: configuration, seeded batch
//! runs with CSV/JSON artifacts, and the verification suites.

pub mod cli;
pub mod config;
mod error;
pub mod run;
pub mod suites;

pub use config::{parse_seeds, Algorithm, ExperimentConfig, InstanceSpec, Settings};
pub use error::{HarnessError, Result};
pub use run::{load_instance, run_experiment, AggregateStats, RunReport, SeedOutcome};
pub use suites::{run_suite, Suite, SuiteOptions, SuiteReport};
