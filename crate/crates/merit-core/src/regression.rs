//! Baselines and regression detection for continuous benchmarking.
//!
//! A baseline is the median of the most recent passing runtimes of one
//! (benchmark, tags, nodes) group; medians shrug off the heavy right tail
//! of HPC runtimes. Failed runs never enter a baseline.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Default number of recent passing runs a baseline covers.
pub const DEFAULT_WINDOW: usize = 5;
/// Default relative slowdown above which a run fails the regression check.
pub const DEFAULT_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub benchmark: String,
    pub tags: BTreeSet<String>,
    pub nodes: u64,
    pub window: usize,
    pub baseline_seconds: f64,
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Info,
    Warn,
    Fail,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Info => "info",
            Severity::Warn => "warn",
            Severity::Fail => "fail",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFinding {
    /// Identifier of the record under test.
    pub record: String,
    pub baseline: Baseline,
    /// `runtime / baseline - 1`; negative for improvements.
    pub relative_slowdown: f64,
    pub severity: Severity,
    pub detail: String,
}

/// Median of the most recent `window` runtimes (the slice is ordered oldest
/// first). An even count averages the two middle values. `None` when the
/// history is empty or the window is zero.
pub fn median_of_recent(runtimes_oldest_first: &[f64], window: usize) -> Option<f64> {
    if runtimes_oldest_first.is_empty() || window == 0 {
        return None;
    }
    let start = runtimes_oldest_first.len().saturating_sub(window);
    let mut recent: Vec<f64> = runtimes_oldest_first[start..].to_vec();
    recent.sort_by(|a, b| a.partial_cmp(b).expect("runtimes are finite"));
    let n = recent.len();
    Some(if n % 2 == 1 {
        recent[n / 2]
    } else {
        (recent[n / 2 - 1] + recent[n / 2]) / 2.0
    })
}

/// Grades a runtime against a baseline.
///
/// The slowdown is `runtime / baseline - 1`. A slowdown above the threshold
/// fails; one within 10 % below the threshold warns; everything else,
/// improvements included, is informational.
pub fn detect_regression(
    record: impl Into<String>,
    runtime_seconds: f64,
    baseline: &Baseline,
    threshold: f64,
) -> RegressionFinding {
    let slowdown = runtime_seconds / baseline.baseline_seconds - 1.0;
    let severity = if slowdown > threshold {
        Severity::Fail
    } else if slowdown > 0.9 * threshold {
        Severity::Warn
    } else {
        Severity::Info
    };
    let detail = format!(
        "runtime {runtime_seconds} s vs baseline {} s over {} run(s): slowdown {:+.2}% (threshold {:.2}%)",
        baseline.baseline_seconds,
        baseline.window,
        slowdown * 100.0,
        threshold * 100.0
    );
    RegressionFinding {
        record: record.into(),
        baseline: baseline.clone(),
        relative_slowdown: slowdown,
        severity,
        detail,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn baseline(seconds: f64) -> Baseline {
        Baseline {
            benchmark: "demo".into(),
            tags: BTreeSet::new(),
            nodes: 8,
            window: 3,
            baseline_seconds: seconds,
        }
    }

    #[test]
    fn median_of_three() {
        assert_eq!(median_of_recent(&[100.0, 102.0, 98.0], 3), Some(100.0));
    }

    #[test]
    fn window_one_takes_most_recent() {
        assert_eq!(median_of_recent(&[100.0, 102.0, 98.0], 1), Some(98.0));
    }

    #[test]
    fn even_window_averages_middle_pair() {
        assert_eq!(median_of_recent(&[1.0, 2.0, 3.0, 10.0], 4), Some(2.5));
    }

    #[test]
    fn window_larger_than_history_uses_everything() {
        assert_eq!(median_of_recent(&[5.0], 10), Some(5.0));
        assert_eq!(median_of_recent(&[], 10), None);
    }

    #[test]
    fn six_percent_slowdown_fails_at_five() {
        let finding = detect_regression("r1", 106.0, &baseline(100.0), 0.05);
        assert_eq!(finding.severity, Severity::Fail);
        assert!((finding.relative_slowdown - 0.06).abs() < 1e-12);
    }

    #[test]
    fn four_percent_slowdown_is_info_at_five() {
        let finding = detect_regression("r1", 104.0, &baseline(100.0), 0.05);
        assert_eq!(finding.severity, Severity::Info);
    }

    #[test]
    fn just_below_threshold_warns() {
        let finding = detect_regression("r1", 104.8, &baseline(100.0), 0.05);
        assert_eq!(finding.severity, Severity::Warn);
    }

    #[test]
    fn improvement_is_info_with_negative_slowdown() {
        let finding = detect_regression("r1", 95.0, &baseline(100.0), 0.05);
        assert_eq!(finding.severity, Severity::Info);
        assert!(finding.relative_slowdown < 0.0);
    }

    #[test]
    fn severity_is_monotone_in_runtime() {
        let b = baseline(100.0);
        let mut last = Severity::Info;
        for runtime in [90.0, 100.0, 104.0, 104.6, 105.0, 105.1, 120.0] {
            let severity = detect_regression("r", runtime, &b, 0.05).severity;
            assert!(severity >= last, "severity dropped at runtime {runtime}");
            last = severity;
        }
    }
}
