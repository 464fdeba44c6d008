//! Parameter-space expansion: turns a benchmark spec plus a tag set into the
//! list of concrete workpackages to execute.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::spec::{BenchmarkSpec, ParamDef, ParameterSet};
use crate::template::{placeholders, render_template, TemplateError};

/// One concrete point of a benchmark's parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Workpackage {
    pub benchmark: String,
    /// Fully evaluated parameter assignment, dependent parameters included.
    pub assignment: BTreeMap<String, String>,
    pub tags: BTreeSet<String>,
    /// Taken from the `nodes` parameter; 1 when the benchmark declares none.
    pub nodes: u64,
    /// Working directory relative to the run root, `<benchmark>/<index>`.
    pub workdir: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExpandError {
    #[error("parameter `{0}`: {1}")]
    Parameter(String, TemplateError),
    #[error("dependent parameters form a reference cycle involving `{0}`")]
    Cycle(String),
    #[error("parameter `{name}` value `{value}` is not a positive node count")]
    InvalidNodes { name: String, value: String },
    #[error("parameter `{0}` has an empty value list")]
    EmptyValues(String),
}

/// Parameter sets active under the requested tags: a set with empty
/// `active_tags` is always active, otherwise the intersection must be
/// non-empty. Of several active sets sharing a name, the last declared wins.
pub fn active_sets<'a>(
    sets: &'a [ParameterSet],
    tags: &BTreeSet<String>,
) -> Vec<&'a ParameterSet> {
    let mut by_name: BTreeMap<&str, usize> = BTreeMap::new();
    let mut order: Vec<&ParameterSet> = Vec::new();
    for set in sets {
        let active = set.active_tags.is_empty() || !set.active_tags.is_disjoint(tags);
        if !active {
            continue;
        }
        match by_name.get(set.name.as_str()) {
            Some(&slot) => order[slot] = set,
            None => {
                by_name.insert(set.name.as_str(), order.len());
                order.push(set);
            }
        }
    }
    order
}

/// Expands the Cartesian product of all active literal value lists, then
/// evaluates dependent (template) parameters in reference order.
pub fn expand_parameters(
    spec: &BenchmarkSpec,
    tags: &BTreeSet<String>,
) -> Result<Vec<Workpackage>, ExpandError> {
    let mut merged: BTreeMap<&str, &ParamDef> = BTreeMap::new();
    for set in active_sets(&spec.parameter_sets, tags) {
        for (name, def) in &set.parameters {
            merged.insert(name.as_str(), def);
        }
    }

    let mut literals: Vec<(&str, Vec<String>)> = Vec::new();
    let mut templates: BTreeMap<&str, &str> = BTreeMap::new();
    for (name, def) in &merged {
        match def {
            ParamDef::Values(values) => {
                if values.is_empty() {
                    return Err(ExpandError::EmptyValues(name.to_string()));
                }
                literals.push((name, values.iter().map(|v| v.render()).collect()));
            }
            ParamDef::Template(text) => {
                templates.insert(name, text.as_str());
            }
        }
    }

    let template_order = topo_order_templates(&templates)?;

    // Cartesian product over literal lists; names iterate in sorted order
    // (BTreeMap), each list in declared order, so expansion is deterministic.
    let mut assignments: Vec<BTreeMap<String, String>> = alloc::vec![BTreeMap::new()];
    for (name, values) in &literals {
        let mut next = Vec::with_capacity(assignments.len() * values.len());
        for base in &assignments {
            for value in values {
                let mut assignment = base.clone();
                assignment.insert(name.to_string(), value.clone());
                next.push(assignment);
            }
        }
        assignments = next;
    }

    let mut workpackages = Vec::with_capacity(assignments.len());
    for (index, mut assignment) in assignments.into_iter().enumerate() {
        for name in &template_order {
            let text = templates[name.as_str()];
            let value = render_template(text, &assignment)
                .map_err(|e| ExpandError::Parameter(name.clone(), e))?;
            assignment.insert(name.clone(), value);
        }
        let nodes = match assignment.get("nodes") {
            None => 1,
            Some(raw) => raw
                .trim()
                .parse::<u64>()
                .ok()
                .filter(|n| *n >= 1)
                .ok_or_else(|| ExpandError::InvalidNodes {
                    name: "nodes".to_string(),
                    value: raw.clone(),
                })?,
        };
        workpackages.push(Workpackage {
            benchmark: spec.name.clone(),
            assignment,
            tags: tags.clone(),
            nodes,
            workdir: format!("{}/{index:04}", spec.name),
        });
    }
    Ok(workpackages)
}

/// Orders template parameters so that a template is evaluated only after the
/// templates it references. References to literal parameters need no
/// ordering.
fn topo_order_templates(templates: &BTreeMap<&str, &str>) -> Result<Vec<String>, ExpandError> {
    let mut deps: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for (name, text) in templates {
        let refs = placeholders(text)
            .map_err(|e| ExpandError::Parameter(name.to_string(), e))?;
        deps.insert(
            name,
            refs.into_iter()
                .filter(|r| templates.contains_key(r.as_str()))
                .collect(),
        );
    }
    let mut order = Vec::with_capacity(templates.len());
    let mut placed: BTreeSet<&str> = BTreeSet::new();
    while order.len() < templates.len() {
        let mut progressed = false;
        for (name, refs) in &deps {
            if placed.contains(name) {
                continue;
            }
            if refs.iter().all(|r| placed.contains(r.as_str())) {
                placed.insert(name);
                order.push(name.to_string());
                progressed = true;
            }
        }
        if !progressed {
            let stuck = deps
                .keys()
                .find(|k| !placed.contains(**k))
                .map(|k| k.to_string())
                .unwrap_or_default();
            return Err(ExpandError::Cycle(stuck));
        }
    }
    Ok(order)
}
