//! Experiment harness around `kcq_core`: JSON experiment configs, a
//! thread-pool trial runner, CSV/JSON reports and the `kcq` command line.

pub mod catalog;
pub mod cli;
pub mod config;
mod error;
pub mod experiment;
pub mod report;
pub mod runner;

pub use config::{ExperimentConfig, Protocol};
pub use error::{HarnessError, Result};
pub use experiment::run_experiment;
pub use report::{emit_report, Format, ReportRow};
pub use runner::{Parallel, Runner};
