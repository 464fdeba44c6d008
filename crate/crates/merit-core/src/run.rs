//! Records of executed workpackages.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::expand::Workpackage;
use crate::metrics::VerificationOutcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Success,
    StepFailure,
    VerificationFailure,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Success => "success",
            RunStatus::StepFailure => "step-failure",
            RunStatus::VerificationFailure => "verification-failure",
        }
    }
}

/// Captured output of one step execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutput {
    pub step: String,
    pub exit_status: i32,
    pub stdout: String,
    pub stderr: String,
    pub wall_seconds: f64,
}

/// Everything recorded about one executed workpackage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub workpackage: Workpackage,
    /// RFC 3339 UTC timestamps, filled in by the executor.
    pub started_at: String,
    pub finished_at: String,
    pub wall_seconds: f64,
    pub status: RunStatus,
    pub raw_output: Vec<StepOutput>,
    /// Extracted metrics; `fom` is the raw figure of merit and
    /// `fom_seconds` its normalized time-metric.
    pub metrics: BTreeMap<String, f64>,
    pub verification: Vec<VerificationOutcome>,
}

impl RunRecord {
    /// Normalized time-metric in seconds, when extraction succeeded.
    pub fn fom_seconds(&self) -> Option<f64> {
        self.metrics.get("fom_seconds").copied()
    }

    /// Whether the record may feed baselines and scaling series.
    pub fn passed(&self) -> bool {
        self.status == RunStatus::Success
    }
}
