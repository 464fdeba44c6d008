//! Strong- and weak-scaling analytics over (nodes, runtime) series, plus a
//! least-squares fit of the serial/parallel runtime model
//! `t(N) = t_s + t_p / N`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::format_float;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub nodes: u64,
    pub runtime_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingMode {
    Strong,
    Weak,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScalingError {
    #[error("series must contain at least one point")]
    Empty,
    #[error("node counts must be strictly increasing and unique")]
    NodesNotIncreasing,
    #[error("runtimes must be strictly positive")]
    NonPositiveRuntime,
    #[error("node counts must be at least 1")]
    ZeroNodes,
    #[error("reference index {0} is out of range")]
    BadReference(usize),
    #[error("operation requires a {expected:?} series, got {actual:?}")]
    ModeMismatch {
        expected: ScalingMode,
        actual: ScalingMode,
    },
    #[error("fit requires at least two distinct node counts")]
    TooFewPoints,
    #[error("csv line {line}: {reason}")]
    Csv { line: usize, reason: String },
}

/// A validated scaling series: strictly increasing unique node counts,
/// strictly positive runtimes, and a designated reference point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSeries {
    benchmark: String,
    mode: ScalingMode,
    points: Vec<ScalingPoint>,
    reference_index: usize,
}

impl ScalingSeries {
    pub fn new(
        benchmark: impl Into<String>,
        mode: ScalingMode,
        points: Vec<ScalingPoint>,
        reference_index: usize,
    ) -> Result<Self, ScalingError> {
        if points.is_empty() {
            return Err(ScalingError::Empty);
        }
        for pair in points.windows(2) {
            if pair[1].nodes <= pair[0].nodes {
                return Err(ScalingError::NodesNotIncreasing);
            }
        }
        for p in &points {
            if p.nodes < 1 {
                return Err(ScalingError::ZeroNodes);
            }
            if p.runtime_seconds.is_nan() || p.runtime_seconds <= 0.0 {
                return Err(ScalingError::NonPositiveRuntime);
            }
        }
        if reference_index >= points.len() {
            return Err(ScalingError::BadReference(reference_index));
        }
        Ok(Self {
            benchmark: benchmark.into(),
            mode,
            points,
            reference_index,
        })
    }

    pub fn benchmark(&self) -> &str {
        &self.benchmark
    }

    pub fn mode(&self) -> ScalingMode {
        self.mode
    }

    pub fn points(&self) -> &[ScalingPoint] {
        &self.points
    }

    pub fn reference_index(&self) -> usize {
        self.reference_index
    }

    pub fn reference(&self) -> ScalingPoint {
        self.points[self.reference_index]
    }
}

/// Maps every point to (nodes / reference nodes, runtime / reference
/// runtime); the reference itself lands exactly on (1, 1).
pub fn relative_series(series: &ScalingSeries) -> Vec<(f64, f64)> {
    let reference = series.reference();
    series
        .points()
        .iter()
        .map(|p| {
            (
                p.nodes as f64 / reference.nodes as f64,
                p.runtime_seconds / reference.runtime_seconds,
            )
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedupPoint {
    pub nodes: u64,
    pub speedup: f64,
    pub efficiency: f64,
}

/// Strong-scaling speedup `S(N) = t(N_ref) / t(N)` and efficiency
/// `E(N) = S(N) * N_ref / N`, both 1 at the reference point.
pub fn strong_speedup_efficiency(
    series: &ScalingSeries,
) -> Result<Vec<SpeedupPoint>, ScalingError> {
    if series.mode() != ScalingMode::Strong {
        return Err(ScalingError::ModeMismatch {
            expected: ScalingMode::Strong,
            actual: series.mode(),
        });
    }
    let reference = series.reference();
    Ok(series
        .points()
        .iter()
        .map(|p| {
            let speedup = reference.runtime_seconds / p.runtime_seconds;
            SpeedupPoint {
                nodes: p.nodes,
                speedup,
                efficiency: speedup * reference.nodes as f64 / p.nodes as f64,
            }
        })
        .collect())
}

/// Weak-scaling efficiency `t(N_ref) / t(N)` at constant work per node.
/// Super-linear values are reported as-is; they are diagnostic signal.
pub fn weak_efficiency(series: &ScalingSeries) -> Result<Vec<(u64, f64)>, ScalingError> {
    if series.mode() != ScalingMode::Weak {
        return Err(ScalingError::ModeMismatch {
            expected: ScalingMode::Weak,
            actual: series.mode(),
        });
    }
    let reference = series.reference();
    Ok(series
        .points()
        .iter()
        .map(|p| (p.nodes, reference.runtime_seconds / p.runtime_seconds))
        .collect())
}

/// Least-squares fit of `t(N) = t_s + t_p / N` with both coefficients
/// constrained non-negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmdahlFit {
    pub serial_seconds: f64,
    pub parallel_seconds: f64,
    /// Euclidean norm of the fit residuals; 0 (to numerical noise) iff the
    /// series lies on some such curve.
    pub residual: f64,
}

impl AmdahlFit {
    pub fn predict(&self, nodes: u64) -> f64 {
        self.serial_seconds + self.parallel_seconds / nodes as f64
    }
}

/// Fits the runtime model over a series with at least two distinct node
/// counts. Exact (zero residual) on noiseless model data.
pub fn fit_amdahl(series: &ScalingSeries) -> Result<AmdahlFit, ScalingError> {
    let points = series.points();
    if points.len() < 2 {
        return Err(ScalingError::TooFewPoints);
    }

    let n = points.len() as f64;
    let (mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for p in points {
        let x = 1.0 / p.nodes as f64;
        let y = p.runtime_seconds;
        sx += x;
        sxx += x * x;
        sy += y;
        sxy += x * y;
    }
    let det = n * sxx - sx * sx;
    if det == 0.0 {
        // Unreachable with unique node counts, kept for totality.
        return Err(ScalingError::TooFewPoints);
    }

    let residual_for = |t_s: f64, t_p: f64| -> f64 {
        let sum: f64 = points
            .iter()
            .map(|p| {
                let err = p.runtime_seconds - (t_s + t_p / p.nodes as f64);
                err * err
            })
            .sum();
        libm::sqrt(sum)
    };

    let t_p = (n * sxy - sx * sy) / det;
    let t_s = (sy - t_p * sx) / n;
    let candidate = if t_s >= 0.0 && t_p >= 0.0 {
        (t_s, t_p)
    } else {
        // Constrained minimum sits on a boundary: either no serial part or
        // no parallel part. Pick the feasible edge with smaller residual.
        let edge_parallel = (0.0, sxy / sxx);
        let edge_serial = (sy / n, 0.0);
        let candidates = [
            (edge_parallel.0, edge_parallel.1.max(0.0)),
            (edge_serial.0.max(0.0), edge_serial.1),
        ];
        let r0 = residual_for(candidates[0].0, candidates[0].1);
        let r1 = residual_for(candidates[1].0, candidates[1].1);
        if r0 <= r1 {
            candidates[0]
        } else {
            candidates[1]
        }
    };

    Ok(AmdahlFit {
        serial_seconds: candidate.0,
        parallel_seconds: candidate.1,
        residual: residual_for(candidate.0, candidate.1),
    })
}

/// Serializes a series in the import/export format: header `nodes,runtime_s`,
/// one point per line, reference marked by a trailing `*` on the node count.
pub fn series_to_csv(series: &ScalingSeries) -> String {
    let mut out = String::from("nodes,runtime_s\n");
    for (i, p) in series.points().iter().enumerate() {
        let marker = if i == series.reference_index() { "*" } else { "" };
        out.push_str(&format!(
            "{}{marker},{}\n",
            p.nodes,
            format_float(p.runtime_seconds)
        ));
    }
    out
}

/// Parses the `nodes,runtime_s` format produced by [`series_to_csv`].
pub fn series_from_csv(
    benchmark: impl Into<String>,
    mode: ScalingMode,
    text: &str,
) -> Result<ScalingSeries, ScalingError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "nodes,runtime_s" => {}
        other => {
            return Err(ScalingError::Csv {
                line: 1,
                reason: format!(
                    "expected header `nodes,runtime_s`, got `{}`",
                    other.map(|(_, l)| l).unwrap_or_default()
                ),
            })
        }
    }

    let mut points = Vec::new();
    let mut reference_index = None;
    for (idx, raw) in lines {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |reason: String| ScalingError::Csv {
            line: idx + 1,
            reason,
        };
        let (nodes_text, runtime_text) = line
            .split_once(',')
            .ok_or_else(|| err("expected `nodes,runtime_s`".to_string()))?;
        let mut nodes_text = nodes_text.trim();
        if let Some(stripped) = nodes_text.strip_suffix('*') {
            if reference_index.is_some() {
                return Err(err("duplicate reference marker".to_string()));
            }
            reference_index = Some(points.len());
            nodes_text = stripped.trim_end();
        }
        let nodes = nodes_text
            .parse::<u64>()
            .map_err(|_| err(format!("bad node count `{nodes_text}`")))?;
        let runtime = runtime_text
            .trim()
            .parse::<f64>()
            .map_err(|_| err(format!("bad runtime `{}`", runtime_text.trim())))?;
        points.push(ScalingPoint {
            nodes,
            runtime_seconds: runtime,
        });
    }
    let reference_index = reference_index.ok_or(ScalingError::Csv {
        line: 1,
        reason: "no reference marker `*` found".to_string(),
    })?;
    ScalingSeries::new(benchmark, mode, points, reference_index)
}
