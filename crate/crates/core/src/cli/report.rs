//! Machine-readable reports: schema natmap-report/1, JSON with the resolved
//! config and tool version embedded; byte-identical for identical config and
//! seed except for the timestamp field.

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;

pub const REPORT_SCHEMA: &str = "natmap-report/1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub tool_version: String,
    pub timestamp: String,
    pub command: String,
    pub passed: bool,
    pub config: ExperimentConfig,
    pub results: serde_json::Value,
}

impl Report {
    pub fn new(
        command: &str,
        config: &ExperimentConfig,
        passed: bool,
        results: serde_json::Value,
    ) -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| format!("{}.{:09}", d.as_secs(), d.subsec_nanos()))
            .unwrap_or_else(|_| "0".into());
        Report {
            schema: REPORT_SCHEMA.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            timestamp,
            command: command.into(),
            passed,
            config: config.clone(),
            results,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The report with the timestamp blanked, for reproducibility checks.
    pub fn normalized_json(&self) -> String {
        let mut clone = self.clone();
        clone.timestamp = String::new();
        serde_json::to_string_pretty(&clone).expect("report serializes")
    }
}
