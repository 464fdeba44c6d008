//! Figure-of-merit extraction, normalization to a time-metric, and result
//! verification.
//!
//! All operations here are pure functions of their inputs and are safe for
//! unrestricted concurrent use.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use regex_automata::meta::Regex;
use regex_automata::PatternID;
use serde::{Deserialize, Serialize};

use crate::spec::{FomKind, FomSpec};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("pattern does not compile: {0}")]
    BadPattern(String),
    #[error("no match for the FOM pattern in the output")]
    NoMatch,
    #[error("captured text `{0}` is not a finite number")]
    BadCapture(String),
    #[error("metric kind does not match the FOM specification")]
    KindMismatch,
    #[error("rate FOM requires positive work_units")]
    MissingWorkUnits,
    #[error("rate must be strictly positive, got {0}")]
    NonPositiveRate(f64),
    #[error("time-metric must be strictly positive, got {0}")]
    NonPositiveTime(f64),
    #[error("reference file line {line}: `{text}` is not a number")]
    BadReferenceValue { line: usize, text: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Time,
    Rate,
    Other,
}

impl From<FomKind> for MetricKind {
    fn from(kind: FomKind) -> Self {
        match kind {
            FomKind::Time => MetricKind::Time,
            FomKind::Rate => MetricKind::Rate,
        }
    }
}

/// One extracted measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub unit: String,
    pub kind: MetricKind,
}

/// Result of applying one verification rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationOutcome {
    /// Label of the rule that produced this outcome.
    pub rule: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed: Option<f64>,
    pub passed: bool,
    pub detail: String,
}

/// Number of capture groups in `pattern`, excluding the implicit whole-match
/// group. Used by spec validation to enforce single-capture FOM patterns.
pub fn count_capture_groups(pattern: &str) -> Result<usize, MetricsError> {
    let re = Regex::new(pattern).map_err(|e| MetricsError::BadPattern(e.to_string()))?;
    Ok(re.group_info().group_len(PatternID::ZERO).saturating_sub(1))
}

/// Pulls the figure of merit out of step output.
///
/// The last match wins (iterative codes print progress lines; the final
/// figure is authoritative) and the capture group is parsed as a finite
/// number: optional sign, decimal digits, optional exponent.
pub fn extract_metrics(output: &str, fom: &FomSpec) -> Result<Metric, MetricsError> {
    let re = Regex::new(&fom.pattern).map_err(|e| MetricsError::BadPattern(e.to_string()))?;
    let mut last: Option<&str> = None;
    for captures in re.captures_iter(output) {
        if let Some(span) = captures.get_group(1) {
            last = Some(&output[span.range()]);
        }
    }
    let text = last.ok_or(MetricsError::NoMatch)?;
    let value = parse_number(text)?;
    Ok(Metric {
        name: "fom".to_string(),
        value,
        unit: fom.unit.clone(),
        kind: fom.kind.into(),
    })
}

fn parse_number(text: &str) -> Result<f64, MetricsError> {
    // Locale-independent grammar: sign, digits with optional dot, optional
    // exponent. `f64::from_str` also accepts `inf`/`nan`; those are
    // rejected so a degenerate capture reads as a parse failure.
    let value: f64 = text
        .trim()
        .parse()
        .map_err(|_| MetricsError::BadCapture(text.to_string()))?;
    if !value.is_finite() {
        return Err(MetricsError::BadCapture(text.to_string()));
    }
    Ok(value)
}

/// Converts an extracted metric to the time-metric in seconds.
///
/// Time metrics pass through unchanged; rate metrics are converted as
/// `work_units / rate`.
pub fn normalize_fom(metric: &Metric, fom: &FomSpec) -> Result<f64, MetricsError> {
    match (metric.kind, fom.kind) {
        (MetricKind::Time, FomKind::Time) => {
            if metric.value > 0.0 {
                Ok(metric.value)
            } else {
                Err(MetricsError::NonPositiveTime(metric.value))
            }
        }
        (MetricKind::Rate, FomKind::Rate) => {
            let work = fom
                .work_units
                .filter(|w| *w > 0.0)
                .ok_or(MetricsError::MissingWorkUnits)?;
            if metric.value > 0.0 {
                Ok(work / metric.value)
            } else {
                Err(MetricsError::NonPositiveRate(metric.value))
            }
        }
        _ => Err(MetricsError::KindMismatch),
    }
}

/// Relative scalar comparison: passes iff
/// `|observed - reference| <= rel_tolerance * |reference|`.
///
/// A zero reference makes the relative form vacuous, so the comparison falls
/// back to an absolute one and says so in the detail text.
pub fn verify_scalar(observed: f64, reference: f64, rel_tolerance: f64) -> VerificationOutcome {
    let deviation = (observed - reference).abs();
    let (passed, detail) = if reference == 0.0 {
        (
            deviation <= rel_tolerance,
            format!(
                "reference is 0; absolute comparison: |{observed}| <= {rel_tolerance}"
            ),
        )
    } else {
        (
            deviation <= rel_tolerance * reference.abs(),
            format!(
                "|{observed} - {reference}| = {deviation} vs {} allowed",
                rel_tolerance * reference.abs()
            ),
        )
    };
    VerificationOutcome {
        rule: "scalar_tolerance".to_string(),
        observed: Some(observed),
        passed,
        detail,
    }
}

/// Passes iff every key occurs verbatim somewhere in the output.
pub fn verify_presence<S: AsRef<str>>(output: &str, keys: &[S]) -> VerificationOutcome {
    let missing: Vec<&str> = keys
        .iter()
        .map(AsRef::as_ref)
        .filter(|k| !output.contains(*k))
        .collect();
    let passed = missing.is_empty();
    let detail = if passed {
        format!("all {} key(s) present", keys.len())
    } else {
        format!("missing key(s): {}", missing.join(", "))
    };
    VerificationOutcome {
        rule: "key_presence".to_string(),
        observed: None,
        passed,
        detail,
    }
}

/// Parses a verification reference file: one value per line, UTF-8, with
/// `#` comments and blank lines ignored.
pub fn parse_reference_values(text: &str) -> Result<Vec<f64>, MetricsError> {
    let mut values = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let value = line
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| MetricsError::BadReferenceValue {
                line: idx + 1,
                text: line.to_string(),
            })?;
        values.push(value);
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn time_fom() -> FomSpec {
        FomSpec {
            pattern: r"FOM: time=([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?) s".to_string(),
            unit: "s".to_string(),
            kind: FomKind::Time,
            work_units: None,
            lower_is_better: true,
        }
    }

    fn rate_fom(work_units: f64) -> FomSpec {
        FomSpec {
            pattern: r"rate=([0-9.eE+-]+)".to_string(),
            unit: "tokens/s".to_string(),
            kind: FomKind::Rate,
            work_units: Some(work_units),
            lower_is_better: true,
        }
    }

    #[test]
    fn extracts_reference_runtime() {
        let metric = extract_metrics("FOM: time=498 s", &time_fom()).unwrap();
        assert_eq!(metric.value, 498.0);
        assert_eq!(metric.unit, "s");
        assert_eq!(metric.kind, MetricKind::Time);
    }

    #[test]
    fn missing_match_is_distinct_from_parse_failure() {
        assert_eq!(
            extract_metrics("no figures here", &time_fom()).unwrap_err(),
            MetricsError::NoMatch
        );
        let fom = FomSpec {
            pattern: "value=(.+) end".to_string(),
            ..time_fom()
        };
        assert!(matches!(
            extract_metrics("value=abc end", &fom).unwrap_err(),
            MetricsError::BadCapture(_)
        ));
    }

    #[test]
    fn last_match_wins() {
        let out = "FOM: time=100 s\nFOM: time=200 s\n";
        assert_eq!(extract_metrics(out, &time_fom()).unwrap().value, 200.0);
    }

    #[test]
    fn infinite_capture_rejected() {
        let fom = FomSpec {
            pattern: "v=(.+)".to_string(),
            ..time_fom()
        };
        assert!(matches!(
            extract_metrics("v=inf", &fom).unwrap_err(),
            MetricsError::BadCapture(_)
        ));
    }

    #[test]
    fn normalize_time_is_identity() {
        let metric = Metric {
            name: "fom".to_string(),
            value: 498.0,
            unit: "s".to_string(),
            kind: MetricKind::Time,
        };
        assert_eq!(normalize_fom(&metric, &time_fom()).unwrap(), 498.0);
    }

    #[test]
    fn normalize_converts_token_rate() {
        // 20 million tokens at a million tokens per second is 20 seconds.
        let metric = Metric {
            name: "fom".to_string(),
            value: 1.0e6,
            unit: "tokens/s".to_string(),
            kind: MetricKind::Rate,
        };
        assert_eq!(normalize_fom(&metric, &rate_fom(2.0e7)).unwrap(), 20.0);
    }

    #[test]
    fn normalize_rejects_non_positive_rate() {
        let metric = Metric {
            name: "fom".to_string(),
            value: 0.0,
            unit: "B/s".to_string(),
            kind: MetricKind::Rate,
        };
        assert_eq!(
            normalize_fom(&metric, &rate_fom(1.0)).unwrap_err(),
            MetricsError::NonPositiveRate(0.0)
        );
    }

    #[test]
    fn scalar_exact_passes_at_zero_tolerance() {
        assert!(verify_scalar(498.0, 498.0, 0.0).passed);
    }

    #[test]
    fn scalar_two_e_minus_ten_fails_at_one_e_minus_ten() {
        let outcome = verify_scalar(1.0 + 2e-10, 1.0, 1e-10);
        assert!(!outcome.passed);
    }

    #[test]
    fn scalar_zero_reference_uses_absolute_fallback() {
        let outcome = verify_scalar(1e-12, 0.0, 1e-10);
        assert!(outcome.passed);
        assert!(outcome.detail.contains("reference is 0"));
        assert!(!verify_scalar(1e-9, 0.0, 1e-10).passed);
    }

    #[test]
    fn scalar_nan_never_passes() {
        assert!(!verify_scalar(f64::NAN, 1.0, 1.0).passed);
    }

    #[test]
    fn presence_checks_all_keys() {
        let out = "step done\nloss=2.3\n";
        assert!(verify_presence(out, &["loss="]).passed);
        assert!(verify_presence::<&str>(out, &[]).passed);
        let outcome = verify_presence(out, &["loss=", "acc="]);
        assert!(!outcome.passed);
        assert!(outcome.detail.contains("acc="));
    }

    #[test]
    fn reference_file_parsing() {
        let text = "# reference solution\n1.5\n  2.25 # trailing comment\n\n-3e-2\n";
        assert_eq!(parse_reference_values(text).unwrap(), vec![1.5, 2.25, -0.03]);
        assert!(matches!(
            parse_reference_values("1.0\noops\n").unwrap_err(),
            MetricsError::BadReferenceValue { line: 2, .. }
        ));
    }

    #[test]
    fn capture_group_counting() {
        assert_eq!(count_capture_groups(r"time=([0-9.]+) s").unwrap(), 1);
        assert_eq!(count_capture_groups(r"a(?:bc)d").unwrap(), 0);
        assert_eq!(count_capture_groups(r"(a)(b)").unwrap(), 2);
        assert!(count_capture_groups(r"(unclosed").is_err());
    }
}
