//! Declarative benchmark-definition schema and its validation rules.
//!
//! A [`BenchmarkSpec`] describes one benchmark: parameter sets (with tag
//! selection), execution steps forming a DAG, memory variants, the
//! figure-of-merit extraction rule, and verification rules. Validation is
//! total: a document either yields a fully checked spec or a list of
//! [`Finding`]s, never a partially usable value.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::metrics::count_capture_groups;
use crate::template::placeholders;

/// One validation problem. Findings are reported, not thrown, so a whole
/// suite can be checked in a single pass.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    /// Benchmark the finding belongs to, or `"<suite>"` for suite-level ones.
    pub benchmark: String,
    pub message: String,
}

impl core::fmt::Display for Finding {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}: {}", self.benchmark, self.message)
    }
}

/// The four step categories a benchmark may declare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Compile,
    Execute,
    Postprocess,
    Verify,
}

/// A single value inside a literal parameter list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Bool(bool),
    Integer(i64),
    Float(f64),
    Text(String),
}

impl ParamValue {
    /// Renders the value the way it appears in commands and assignments.
    pub fn render(&self) -> String {
        match self {
            ParamValue::Bool(b) => b.to_string(),
            ParamValue::Integer(i) => i.to_string(),
            ParamValue::Float(f) => crate::format_float(*f),
            ParamValue::Text(s) => s.clone(),
        }
    }
}

/// A parameter definition: either a non-empty list of literal values (the
/// workpackage expansion multiplies these out) or a template expression that
/// is evaluated after substituting other parameters.
///
/// In the document syntax an array is a literal list and a bare string is a
/// template; a literal string that must not be treated as a template can be
/// written as a one-element list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamDef {
    Values(Vec<ParamValue>),
    Template(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterSet {
    pub name: String,
    /// Tags under which this set is active. Empty means always active. A
    /// later active set overrides an earlier one with the same name, and a
    /// parameter defined by several active sets takes its last definition.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub active_tags: BTreeSet<String>,
    #[serde(default)]
    pub parameters: BTreeMap<String, ParamDef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Step {
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub depends_on: Vec<String>,
    /// Command template; `${param}` placeholders are rendered per
    /// workpackage.
    pub command: String,
    pub kind: StepKind,
    #[serde(default = "default_iterations")]
    pub iterations: u64,
}

fn default_iterations() -> u64 {
    1
}

/// Whether the figure of merit is already a time or a rate that must be
/// converted to a time via a fixed amount of work.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FomKind {
    Time,
    Rate,
}

/// How the figure of merit is pulled out of step output and normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FomSpec {
    /// Regular expression with exactly one capture group; the last match in
    /// the output wins and the captured text is parsed as a number.
    pub pattern: String,
    pub unit: String,
    pub kind: FomKind,
    /// Amount of work whose completion defines the time-metric; required for
    /// (and only for) `kind = rate`. The normalized value is
    /// `work_units / rate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub work_units: Option<f64>,
    /// Direction of the normalized metric. Normalization always produces
    /// seconds, lower-is-better, so this must be true.
    #[serde(default = "default_true")]
    pub lower_is_better: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    ScalarTolerance,
    ExactMatch,
    KeyPresence,
}

/// Reference side of a verification rule: an inline number or the path of a
/// reference file (one value per line, `#` comments).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReferenceValue {
    Number(f64),
    File(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerificationRule {
    pub kind: RuleKind,
    /// Metric name for scalar rules; required output substring for
    /// `key_presence`.
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tolerance: Option<f64>,
}

impl VerificationRule {
    /// Short label used in verification outcomes and reports.
    pub fn label(&self) -> String {
        let kind = match self.kind {
            RuleKind::ScalarTolerance => "scalar_tolerance",
            RuleKind::ExactMatch => "exact_match",
            RuleKind::KeyPresence => "key_presence",
        };
        format!("{kind}({})", self.target)
    }
}

/// The canonical memory variants and their fractions of reference
/// per-device memory.
pub const CANONICAL_VARIANTS: [(&str, f64); 4] = [
    ("tiny", 0.25),
    ("small", 0.50),
    ("medium", 0.75),
    ("large", 1.00),
];

/// Fraction of reference device memory for a canonical variant name.
pub fn canonical_fraction(name: &str) -> Option<f64> {
    CANONICAL_VARIANTS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, f)| *f)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantDef {
    /// `tiny`/`small`/`medium`/`large`, or a free tag with no memory
    /// fraction.
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memory_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub tag_overrides: BTreeSet<String>,
}

impl VariantDef {
    /// The effective memory fraction: the canonical value for canonical
    /// names (unless spelled out), none for free tags.
    pub fn effective_fraction(&self) -> Option<f64> {
        self.memory_fraction.or_else(|| canonical_fraction(&self.name))
    }

    /// Per-device memory budget in bytes on a device of the given size.
    pub fn budget_bytes(&self, device_memory_bytes: u64) -> Option<f64> {
        self.effective_fraction()
            .map(|f| f * device_memory_bytes as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    Local,
    Simulated,
    ExternalScheduler,
}

/// Where and how rendered commands are submitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformProfile {
    pub name: String,
    pub backend: BackendKind,
    /// Template wrapping each rendered step command; `${command}` and
    /// `${nodes}` are available.
    pub submission_template: String,
    #[serde(default)]
    pub environment: BTreeMap<String, String>,
    pub devices_per_node: u64,
    pub device_memory_bytes: u64,
}

impl PlatformProfile {
    pub fn validate(&self) -> Vec<Finding> {
        let mut findings = Vec::new();
        let mut push = |message: String| {
            findings.push(Finding {
                benchmark: format!("<platform:{}>", self.name),
                message,
            });
        };
        if !is_identifier(&self.name) {
            push("platform name must be a non-empty identifier".to_string());
        }
        if self.devices_per_node < 1 {
            push("devices_per_node must be at least 1".to_string());
        }
        if self.device_memory_bytes == 0 {
            push("device_memory_bytes must be positive".to_string());
        }
        if let Err(e) = placeholders(&self.submission_template) {
            push(format!("submission_template: {e}"));
        }
        findings
    }
}

/// A complete benchmark definition.
///
/// Scalar fields come first so the document serializer never has to emit a
/// value after a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSpec {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Node count anchoring reference runtimes.
    #[serde(default = "default_reference_nodes")]
    pub reference_nodes: u64,
    #[serde(rename = "parameter_set", default, skip_serializing_if = "Vec::is_empty")]
    pub parameter_sets: Vec<ParameterSet>,
    #[serde(rename = "step", default, skip_serializing_if = "Vec::is_empty")]
    pub steps: Vec<Step>,
    #[serde(rename = "variant", default, skip_serializing_if = "Vec::is_empty")]
    pub variants: Vec<VariantDef>,
    pub fom: FomSpec,
    #[serde(rename = "verification", default, skip_serializing_if = "Vec::is_empty")]
    pub verification: Vec<VerificationRule>,
}

fn default_reference_nodes() -> u64 {
    8
}

/// Names used as path components and cross-references: ASCII alphanumeric
/// plus `-`, `_`, `.`, not starting with a separator.
pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphanumeric() => {}
        _ => return false,
    }
    name.chars()
        .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.')
}

impl BenchmarkSpec {
    /// Expands variant names in a requested tag set: asking for a variant
    /// by name also activates its `tag_overrides`.
    pub fn resolve_tags(&self, requested: &BTreeSet<String>) -> BTreeSet<String> {
        let mut resolved = requested.clone();
        for variant in &self.variants {
            if requested.contains(&variant.name) {
                resolved.extend(variant.tag_overrides.iter().cloned());
            }
        }
        resolved
    }

    /// Checks every schema invariant and returns the findings (empty when
    /// the spec is valid).
    pub fn validate(&self) -> Vec<Finding> {
        let mut findings = Vec::new();
        let bench = if self.name.is_empty() {
            "<unnamed>".to_string()
        } else {
            self.name.clone()
        };
        let mut push = |message: String| {
            findings.push(Finding {
                benchmark: bench.clone(),
                message,
            });
        };

        if !is_identifier(&self.name) {
            push("benchmark name must be a non-empty identifier".to_string());
        }
        if self.reference_nodes < 1 {
            push("reference_nodes must be at least 1".to_string());
        }

        self.validate_steps(&mut push);
        self.validate_parameters(&mut push);
        self.validate_fom(&mut push);
        self.validate_rules(&mut push);
        self.validate_variants(&mut push);

        findings
    }

    fn validate_steps(&self, push: &mut impl FnMut(String)) {
        let mut names = BTreeSet::new();
        for step in &self.steps {
            if !is_identifier(&step.name) {
                push(format!("step `{}` is not a valid identifier", step.name));
            }
            if !names.insert(step.name.as_str()) {
                push(format!("duplicate step name `{}`", step.name));
            }
            if step.iterations < 1 {
                push(format!("step `{}`: iterations must be at least 1", step.name));
            }
        }
        for step in &self.steps {
            for dep in &step.depends_on {
                if !names.contains(dep.as_str()) {
                    push(format!(
                        "step `{}` depends on undeclared step `{}`",
                        step.name, dep
                    ));
                }
            }
        }
        // Kahn over the step graph; anything left over sits on a cycle.
        let index: BTreeMap<&str, usize> = self
            .steps
            .iter()
            .enumerate()
            .map(|(i, s)| (s.name.as_str(), i))
            .collect();
        let mut indegree = alloc::vec![0usize; self.steps.len()];
        for step in &self.steps {
            for dep in &step.depends_on {
                if index.contains_key(dep.as_str()) {
                    indegree[index[step.name.as_str()]] += 1;
                }
            }
        }
        let mut ready: Vec<usize> = indegree
            .iter()
            .enumerate()
            .filter(|(_, d)| **d == 0)
            .map(|(i, _)| i)
            .collect();
        let mut seen = 0;
        while let Some(i) = ready.pop() {
            seen += 1;
            let done = self.steps[i].name.as_str();
            for (j, step) in self.steps.iter().enumerate() {
                if step.depends_on.iter().any(|d| d == done) {
                    indegree[j] -= 1;
                    if indegree[j] == 0 {
                        ready.push(j);
                    }
                }
            }
        }
        if seen != self.steps.len() {
            push("step dependencies form a cycle".to_string());
        }
    }

    fn validate_parameters(&self, push: &mut impl FnMut(String)) {
        let mut defined: BTreeSet<&str> = BTreeSet::new();
        for set in &self.parameter_sets {
            if !is_identifier(&set.name) {
                push(format!("parameter set `{}` is not a valid identifier", set.name));
            }
            for (name, def) in &set.parameters {
                defined.insert(name.as_str());
                match def {
                    ParamDef::Values(values) if values.is_empty() => {
                        push(format!("parameter `{name}` has an empty value list"));
                    }
                    ParamDef::Template(text) => {
                        if let Err(e) = placeholders(text) {
                            push(format!("parameter `{name}`: {e}"));
                        }
                    }
                    _ => {}
                }
            }
        }

        // Reference graph over template parameters, taken across all sets
        // (conservative: a cycle between definitions that can never be
        // active together is still rejected).
        let mut edges: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
        for set in &self.parameter_sets {
            for (name, def) in &set.parameters {
                if let ParamDef::Template(text) = def {
                    if let Ok(refs) = placeholders(text) {
                        edges.entry(name.as_str()).or_default().extend(refs);
                    }
                }
            }
        }
        if has_cycle(&edges) {
            push("dependent parameters form a reference cycle".to_string());
        }

        // Every placeholder must resolve to some declared parameter.
        let mut check_refs = |context: &str, text: &str| match placeholders(text) {
            Ok(refs) => {
                for r in refs {
                    if !defined.contains(r.as_str()) {
                        push(format!("{context} references undefined parameter `{r}`"));
                    }
                }
            }
            Err(e) => push(format!("{context}: {e}")),
        };
        for step in &self.steps {
            check_refs(&format!("step `{}` command", step.name), &step.command);
        }
        for set in &self.parameter_sets {
            for (name, def) in &set.parameters {
                if let ParamDef::Template(text) = def {
                    check_refs(&format!("parameter `{name}`"), text);
                }
            }
        }
    }

    fn validate_fom(&self, push: &mut impl FnMut(String)) {
        match count_capture_groups(&self.fom.pattern) {
            Ok(1) => {}
            Ok(n) => push(format!(
                "fom pattern must have exactly one capture group, found {n}"
            )),
            Err(e) => push(format!("fom pattern does not compile: {e}")),
        }
        match (self.fom.kind, self.fom.work_units) {
            (FomKind::Rate, None) => push("fom kind `rate` requires work_units".to_string()),
            (FomKind::Rate, Some(w)) if w.is_nan() || w <= 0.0 => {
                push("fom work_units must be positive".to_string())
            }
            (FomKind::Time, Some(_)) => {
                push("fom work_units is only meaningful for kind `rate`".to_string())
            }
            _ => {}
        }
        if !self.fom.lower_is_better {
            push("normalized FOMs are seconds, so lower_is_better must be true".to_string());
        }
    }

    fn validate_rules(&self, push: &mut impl FnMut(String)) {
        for rule in &self.verification {
            let label = rule.label();
            if rule.target.is_empty() {
                push(format!("{label}: target must be non-empty"));
            }
            match rule.kind {
                RuleKind::ScalarTolerance => {
                    if rule.reference.is_none() {
                        push(format!("{label}: reference is required"));
                    }
                    match rule.rel_tolerance {
                        None => push(format!("{label}: rel_tolerance is required")),
                        Some(t) if t < 0.0 => {
                            push(format!("{label}: rel_tolerance must be non-negative"))
                        }
                        _ => {}
                    }
                }
                RuleKind::ExactMatch => {
                    if rule.reference.is_none() {
                        push(format!("{label}: reference is required"));
                    }
                    if rule.rel_tolerance.is_some() {
                        push(format!("{label}: rel_tolerance only applies to scalar_tolerance"));
                    }
                }
                RuleKind::KeyPresence => {
                    if rule.reference.is_some() {
                        push(format!("{label}: key_presence takes no reference"));
                    }
                    if rule.rel_tolerance.is_some() {
                        push(format!("{label}: rel_tolerance only applies to scalar_tolerance"));
                    }
                }
            }
        }
    }

    fn validate_variants(&self, push: &mut impl FnMut(String)) {
        let mut names = BTreeSet::new();
        for variant in &self.variants {
            if !is_identifier(&variant.name) {
                push(format!("variant `{}` is not a valid identifier", variant.name));
            }
            if !names.insert(variant.name.as_str()) {
                push(format!("duplicate variant `{}`", variant.name));
            }
            match (canonical_fraction(&variant.name), variant.memory_fraction) {
                (Some(expected), Some(given)) if given != expected => push(format!(
                    "variant `{}` must use memory fraction {expected}, got {given}",
                    variant.name
                )),
                (None, Some(_)) => push(format!(
                    "free variant `{}` carries no memory fraction",
                    variant.name
                )),
                _ => {}
            }
        }
    }
}

fn has_cycle(edges: &BTreeMap<&str, BTreeSet<String>>) -> bool {
    // Iterative DFS with colors; only template parameters appear as nodes.
    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        White,
        Gray,
        Black,
    }
    let mut color: BTreeMap<&str, Color> = edges.keys().map(|k| (*k, Color::White)).collect();
    for &start in edges.keys() {
        if color[start] != Color::White {
            continue;
        }
        let mut stack = alloc::vec![(start, false)];
        while let Some((node, processed)) = stack.pop() {
            if processed {
                color.insert(node, Color::Black);
                continue;
            }
            match color.get(node) {
                Some(Color::Gray) => return true,
                Some(Color::Black) => continue,
                _ => {}
            }
            color.insert(node, Color::Gray);
            stack.push((node, true));
            if let Some(next) = edges.get(node) {
                for n in next {
                    if let Some((key, _)) = edges.get_key_value(n.as_str()) {
                        match color[*key] {
                            Color::Gray => return true,
                            Color::White => stack.push((key, false)),
                            Color::Black => {}
                        }
                    }
                }
            }
        }
    }
    false
}

/// Validates every spec plus suite-level rules (unique benchmark names).
pub fn validate_suite(specs: &[BenchmarkSpec]) -> Vec<Finding> {
    let mut findings = Vec::new();
    let mut seen = BTreeSet::new();
    for spec in specs {
        if !seen.insert(spec.name.as_str()) {
            findings.push(Finding {
                benchmark: "<suite>".to_string(),
                message: format!("duplicate benchmark name `{}`", spec.name),
            });
        }
        findings.extend(spec.validate());
    }
    findings
}
