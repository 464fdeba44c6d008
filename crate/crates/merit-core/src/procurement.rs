//! Procurement mathematics: partition sizing, memory-variant selection,
//! high-scaling commitment ratios, the state-vector memory model, TCO, and
//! the value-for-money aggregate.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// A proposed or reference system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemModel {
    pub name: String,
    pub nodes: u64,
    /// FP64 peak per node, FLOP/s.
    pub node_peak_flops: f64,
    pub devices_per_node: u64,
    pub device_memory_bytes: u64,
    /// Average draw including cooling, watts.
    pub avg_power_watts: f64,
    pub capex_currency: f64,
    pub energy_price_per_kwh: f64,
    pub lifetime_hours: f64,
    /// Fraction of the lifetime the system is productive, in (0, 1].
    #[serde(default = "default_availability")]
    pub availability: f64,
}

fn default_availability() -> f64 {
    1.0
}

/// Strictly positive; NaN reads as invalid.
fn positive(value: f64) -> bool {
    value > 0.0
}

impl SystemModel {
    pub fn peak_flops(&self) -> f64 {
        self.nodes as f64 * self.node_peak_flops
    }

    pub fn devices(&self) -> u64 {
        self.nodes * self.devices_per_node
    }

    pub fn validate(&self) -> Result<(), ProcurementError> {
        let bad = |what: &str| {
            Err(ProcurementError::InvalidSystem {
                system: self.name.clone(),
                field: what.to_string(),
            })
        };
        if self.nodes < 1 {
            return bad("nodes");
        }
        if !positive(self.node_peak_flops) {
            return bad("node_peak_flops");
        }
        if self.devices_per_node < 1 {
            return bad("devices_per_node");
        }
        if self.device_memory_bytes == 0 {
            return bad("device_memory_bytes");
        }
        if !positive(self.avg_power_watts) {
            return bad("avg_power_watts");
        }
        if self.capex_currency < 0.0 {
            return bad("capex_currency");
        }
        if !positive(self.energy_price_per_kwh) {
            return bad("energy_price_per_kwh");
        }
        if self.lifetime_hours.is_nan() || self.lifetime_hours < 0.0 {
            return bad("lifetime_hours");
        }
        if !(positive(self.availability) && self.availability <= 1.0) {
            return bad("availability");
        }
        Ok(())
    }
}

/// A benchmark's reference measurement on the preparation system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceEntry {
    pub benchmark: String,
    pub reference_nodes: u64,
    pub reference_runtime_seconds: f64,
    #[serde(default = "default_weight")]
    pub weight: f64,
}

fn default_weight() -> f64 {
    1.0
}

/// A runtime a proposal commits to for one benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Commitment {
    pub benchmark: String,
    pub committed_runtime_seconds: f64,
    pub committed_nodes: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chosen_variant: Option<String>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProcurementError {
    #[error("system `{system}`: field {field} violates its positivity constraint")]
    InvalidSystem { system: String, field: String },
    #[error("target {target} FLOP/s is below one node's peak {node_peak} FLOP/s")]
    EmptyPartition { target: f64, node_peak: f64 },
    #[error("inputs must be positive")]
    NonPositiveInput,
    #[error("no memory variant fits: smallest footprint {smallest} B exceeds {available} B per device")]
    NoVariantFits { smallest: f64, available: u64 },
    #[error("variant table must have strictly increasing footprints")]
    NonIncreasingFootprints,
    #[error("variant table is empty")]
    EmptyVariantTable,
    #[error("benchmark mismatch: commitment is for `{commitment}`, reference for `{reference}`")]
    BenchmarkMismatch { commitment: String, reference: String },
    #[error("no commitment for benchmark `{0}`")]
    MissingCommitment(String),
    #[error("runtime must be strictly positive")]
    NonPositiveRuntime,
    #[error("state-vector size 16 * 2^{0} overflows")]
    Overflow(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SizingConstraint {
    #[default]
    None,
    PowerOfTwo,
}

/// Number of nodes filling a compute target: `floor(target / node_peak)`,
/// optionally rounded down to the closest power of two for workloads with
/// power-of-two node-count requirements. Floor, not round: a partition must
/// not exceed the stated compute budget.
pub fn size_partition(
    target_flops: f64,
    node_peak_flops: f64,
    constraint: SizingConstraint,
) -> Result<u64, ProcurementError> {
    if !positive(target_flops) || !positive(node_peak_flops) {
        return Err(ProcurementError::NonPositiveInput);
    }
    let unconstrained = (target_flops / node_peak_flops) as u64;
    if unconstrained < 1 {
        return Err(ProcurementError::EmptyPartition {
            target: target_flops,
            node_peak: node_peak_flops,
        });
    }
    Ok(match constraint {
        SizingConstraint::None => unconstrained,
        SizingConstraint::PowerOfTwo => {
            let mut p = 1u64;
            while p <= unconstrained / 2 {
                p *= 2;
            }
            p
        }
    })
}

/// A compute target scaled up from the reference partition, and the node
/// count a proposal needs to provide it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledPartition {
    pub target_flops: f64,
    pub nodes: u64,
}

/// Scales the reference sub-partition's compute target by `scale_factor`
/// and sizes the proposal's partition for it.
pub fn exascale_partition(
    reference_partition_nodes: u64,
    reference_node_peak_flops: f64,
    scale_factor: f64,
    proposal_node_peak_flops: f64,
    constraint: SizingConstraint,
) -> Result<ScaledPartition, ProcurementError> {
    if reference_partition_nodes < 1 || !positive(scale_factor) {
        return Err(ProcurementError::NonPositiveInput);
    }
    let target_flops =
        reference_partition_nodes as f64 * reference_node_peak_flops * scale_factor;
    let nodes = size_partition(target_flops, proposal_node_peak_flops, constraint)?;
    Ok(ScaledPartition { target_flops, nodes })
}

/// Memory variant names in footprint order.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Tiny,
    Small,
    Medium,
    Large,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Tiny => "tiny",
            Variant::Small => "small",
            Variant::Medium => "medium",
            Variant::Large => "large",
        }
    }

    pub fn fraction(self) -> f64 {
        match self {
            Variant::Tiny => 0.25,
            Variant::Small => 0.50,
            Variant::Medium => 0.75,
            Variant::Large => 1.00,
        }
    }
}

/// Per-device footprints of a workload's memory variants, measured on the
/// reference system, plus how the total workload grows on scale-up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemoryVariantTable {
    pub reference_devices: u64,
    /// Total workload memory multiplier between reference and scaled-up
    /// execution.
    pub workload_scale_factor: f64,
    /// Footprint bytes per device at reference for each prepared variant;
    /// benchmarks may prepare a subset of the four.
    pub footprint_bytes: BTreeMap<Variant, u64>,
}

impl MemoryVariantTable {
    pub fn validate(&self) -> Result<(), ProcurementError> {
        if self.footprint_bytes.is_empty() {
            return Err(ProcurementError::EmptyVariantTable);
        }
        let mut prev = 0u64;
        for &bytes in self.footprint_bytes.values() {
            if bytes <= prev {
                return Err(ProcurementError::NonIncreasingFootprints);
            }
            prev = bytes;
        }
        if self.reference_devices < 1 || !positive(self.workload_scale_factor) {
            return Err(ProcurementError::NonPositiveInput);
        }
        Ok(())
    }
}

/// Chooses the largest variant whose scaled-up per-device footprint fits the
/// proposal's device memory.
///
/// The total workload memory scales by `workload_scale_factor` and spreads
/// evenly over the proposal partition's devices, so the per-device footprint
/// becomes `footprint_ref * workload_scale_factor * reference_devices /
/// proposal_devices`.
pub fn select_memory_variant(
    table: &MemoryVariantTable,
    proposal: &SystemModel,
    proposal_partition_nodes: u64,
) -> Result<Variant, ProcurementError> {
    table.validate()?;
    let proposal_devices = proposal_partition_nodes * proposal.devices_per_node;
    if proposal_devices < 1 {
        return Err(ProcurementError::NonPositiveInput);
    }
    let factor =
        table.workload_scale_factor * table.reference_devices as f64 / proposal_devices as f64;

    let mut chosen = None;
    let mut smallest = f64::INFINITY;
    for (&variant, &reference_bytes) in table.footprint_bytes.iter() {
        let scaled = reference_bytes as f64 * factor;
        smallest = smallest.min(scaled);
        if scaled <= proposal.device_memory_bytes as f64 {
            chosen = Some(variant);
        }
    }
    chosen.ok_or(ProcurementError::NoVariantFits {
        smallest,
        available: proposal.device_memory_bytes,
    })
}

/// Bytes needed to hold an `n`-qubit complex-double state vector:
/// exactly `16 * 2^n`.
pub fn statevector_memory(n_qubits: u32) -> Result<u128, ProcurementError> {
    if n_qubits < 1 {
        return Err(ProcurementError::NonPositiveInput);
    }
    // 16 * 2^n = 2^(n+4); anything past 2^127 leaves u128.
    if n_qubits > 123 {
        return Err(ProcurementError::Overflow(n_qubits));
    }
    Ok(1u128 << (n_qubits + 4))
}

/// Ratio of the committed runtime on the scaled-up partition to the
/// reference runtime; lower is better.
pub fn high_scaling_ratio(
    commitment: &Commitment,
    reference: &ReferenceEntry,
) -> Result<f64, ProcurementError> {
    if commitment.benchmark != reference.benchmark {
        return Err(ProcurementError::BenchmarkMismatch {
            commitment: commitment.benchmark.clone(),
            reference: reference.benchmark.clone(),
        });
    }
    if !positive(commitment.committed_runtime_seconds)
        || !positive(reference.reference_runtime_seconds)
    {
        return Err(ProcurementError::NonPositiveRuntime);
    }
    Ok(commitment.committed_runtime_seconds / reference.reference_runtime_seconds)
}

/// Total cost of ownership: capital expenditure plus lifetime energy cost.
/// Cooling is folded into the average power figure.
pub fn tco(system: &SystemModel) -> f64 {
    system.capex_currency
        + (system.avg_power_watts / 1000.0)
            * system.lifetime_hours
            * system.availability
            * system.energy_price_per_kwh
}

/// Per-benchmark contribution to an evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkScore {
    pub benchmark: String,
    pub weight: f64,
    /// Lifetime workload executions on the proposal, normalized so the
    /// reference system with reference runtimes scores exactly 1.
    pub normalized_throughput: f64,
    /// Committed runtime over reference runtime; lower is better.
    pub high_scaling_ratio: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chosen_variant: Option<String>,
}

/// Outcome of evaluating one proposal against the reference workloads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub proposal: String,
    pub scores: Vec<BenchmarkScore>,
    /// `sum(weight_b * normalized_throughput_b)`.
    pub weighted_value: f64,
    pub tco_currency: f64,
    /// `weighted_value / tco_currency`; the ranking score.
    pub value_for_money: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// How many times a workload runs over a system's productive lifetime when
/// each run occupies `job_nodes` of the system's `nodes` for `runtime`
/// seconds: `(lifetime_hours * 3600 * availability / runtime) *
/// (nodes / job_nodes)`.
fn lifetime_runs(system: &SystemModel, runtime_seconds: f64, job_nodes: u64) -> f64 {
    (system.lifetime_hours * 3600.0 * system.availability / runtime_seconds)
        * (system.nodes as f64 / job_nodes as f64)
}

/// Evaluates a proposal: normalized lifetime throughput per benchmark,
/// weighted and divided by the proposal's TCO.
///
/// The normalizer is the reference system running the reference workloads,
/// so a proposal identical to the reference scores exactly the weight sum.
pub fn evaluate_value_for_money(
    references: &[ReferenceEntry],
    commitments: &[Commitment],
    proposal: &SystemModel,
    reference_system: &SystemModel,
) -> Result<EvaluationReport, ProcurementError> {
    proposal.validate()?;
    reference_system.validate()?;

    let by_benchmark: BTreeMap<&str, &Commitment> = commitments
        .iter()
        .map(|c| (c.benchmark.as_str(), c))
        .collect();

    let mut scores = Vec::with_capacity(references.len());
    let mut weighted_value = 0.0;
    for reference in references {
        let commitment = by_benchmark
            .get(reference.benchmark.as_str())
            .copied()
            .ok_or_else(|| ProcurementError::MissingCommitment(reference.benchmark.clone()))?;
        if !positive(reference.reference_runtime_seconds)
            || !positive(commitment.committed_runtime_seconds)
        {
            return Err(ProcurementError::NonPositiveRuntime);
        }
        if reference.reference_nodes < 1 || commitment.committed_nodes < 1 {
            return Err(ProcurementError::NonPositiveInput);
        }
        if reference.weight < 0.0 {
            return Err(ProcurementError::NonPositiveInput);
        }

        let runs = lifetime_runs(
            proposal,
            commitment.committed_runtime_seconds,
            commitment.committed_nodes,
        );
        let normalizer = lifetime_runs(
            reference_system,
            reference.reference_runtime_seconds,
            reference.reference_nodes,
        );
        let normalized_throughput = runs / normalizer;
        weighted_value += reference.weight * normalized_throughput;

        scores.push(BenchmarkScore {
            benchmark: reference.benchmark.clone(),
            weight: reference.weight,
            normalized_throughput,
            high_scaling_ratio: high_scaling_ratio(commitment, reference)?,
            chosen_variant: commitment.chosen_variant.clone(),
        });
    }

    let mut warnings = Vec::new();
    if references.iter().all(|r| r.weight == 0.0) {
        warnings.push("all benchmark weights are zero; weighted value is 0".to_string());
    }

    let tco_currency = tco(proposal);
    Ok(EvaluationReport {
        proposal: proposal.name.clone(),
        scores,
        weighted_value,
        tco_currency,
        value_for_money: weighted_value / tco_currency,
        warnings,
    })
}
