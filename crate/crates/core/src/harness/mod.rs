//! End-to-end experiments: configuration, closed-loop runs, records and reports.

pub mod config;
pub mod record;
pub mod report;
pub mod runner;

pub use config::{Algorithm, Experiment, ExperimentConfig};
pub use record::{RunMeta, RunRecord, StepRecord, SCHEMA_VERSION};
pub use report::{compare, report, write_run, SummaryRow};
pub use runner::{execute, new_record, run};
