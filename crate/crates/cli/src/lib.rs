//! Config parsing, experiment dispatch and report writing for the `ucont` binary.

pub mod config;
pub mod report;
pub mod run;

pub use config::{parse_config, ExperimentConfig, Kind};
pub use report::{Check, ExperimentReport, Status};
pub use run::run;
