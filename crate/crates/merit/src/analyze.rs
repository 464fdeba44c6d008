//! Builds scaling series out of stored records.

use std::collections::{BTreeMap, BTreeSet};

use merit_core::scaling::{ScalingMode, ScalingPoint, ScalingSeries};

use crate::store::Store;

#[derive(Debug, thiserror::Error)]
pub enum AnalyzeError {
    #[error("no passing records for benchmark `{0}` under the requested tags")]
    NoRecords(String),
    #[error("no record at the reference node count {0}")]
    NoReferencePoint(u64),
    #[error(transparent)]
    Series(#[from] merit_core::scaling::ScalingError),
}

/// Assembles one series per benchmark from the store: the latest passing
/// record of each node count. The reference point is `reference_nodes` when
/// given (and must be present), otherwise the smallest node count.
pub fn series_from_store(
    store: &Store,
    benchmark: &str,
    tags: &BTreeSet<String>,
    mode: ScalingMode,
    reference_nodes: Option<u64>,
) -> Result<ScalingSeries, AnalyzeError> {
    let mut latest_per_nodes: BTreeMap<u64, f64> = BTreeMap::new();
    for record in store.records() {
        let wp = &record.record.workpackage;
        if wp.benchmark != benchmark || wp.tags != *tags || !record.record.passed() {
            continue;
        }
        if let Some(seconds) = record.record.fom_seconds() {
            latest_per_nodes.insert(wp.nodes, seconds);
        }
    }
    if latest_per_nodes.is_empty() {
        return Err(AnalyzeError::NoRecords(benchmark.to_string()));
    }

    let points: Vec<ScalingPoint> = latest_per_nodes
        .iter()
        .map(|(&nodes, &runtime_seconds)| ScalingPoint {
            nodes,
            runtime_seconds,
        })
        .collect();
    let reference_index = match reference_nodes {
        Some(reference) => points
            .iter()
            .position(|p| p.nodes == reference)
            .ok_or(AnalyzeError::NoReferencePoint(reference))?,
        None => 0,
    };
    Ok(ScalingSeries::new(benchmark, mode, points, reference_index)?)
}
