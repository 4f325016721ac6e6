//! Configuration-driven experiment runner: fixture loading, pipeline
//! orchestration and machine-readable reports.

pub mod config;
pub mod report;
pub mod run;

pub use config::ExperimentConfig;
pub use report::{Report, REPORT_SCHEMA};
