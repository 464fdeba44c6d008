//! Step planning: a deterministic topological order over the step DAG.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::spec::{BenchmarkSpec, Step, StepKind};
use crate::template::{render_template, TemplateError};

/// A step in plan order, command still unrendered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedStep {
    pub name: String,
    pub kind: StepKind,
    pub command: String,
    pub iterations: u64,
}

/// A step with its command rendered for one workpackage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderedStep {
    pub name: String,
    pub kind: StepKind,
    pub command: String,
    pub iterations: u64,
}

/// Ordered step list respecting dependencies; ties broken by declaration
/// order, so the plan is identical for identical specs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionPlan {
    pub steps: Vec<PlannedStep>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("step dependencies form a cycle")]
    Cycle,
    #[error("step `{0}` depends on undeclared step `{1}`")]
    UnknownDependency(String, String),
}

/// Topologically sorts the spec's steps.
///
/// Validation guarantees acyclicity upstream, but the sort stays total and
/// reports cycles rather than looping.
pub fn plan(spec: &BenchmarkSpec) -> Result<ExecutionPlan, PlanError> {
    let index: BTreeMap<&str, usize> = spec
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| (s.name.as_str(), i))
        .collect();
    let mut indegree = alloc::vec![0usize; spec.steps.len()];
    for step in &spec.steps {
        for dep in &step.depends_on {
            if !index.contains_key(dep.as_str()) {
                return Err(PlanError::UnknownDependency(step.name.clone(), dep.clone()));
            }
            indegree[index[step.name.as_str()]] += 1;
        }
    }

    let mut order: Vec<&Step> = Vec::with_capacity(spec.steps.len());
    let mut done = alloc::vec![false; spec.steps.len()];
    while order.len() < spec.steps.len() {
        // Smallest declaration index among ready steps: deterministic
        // tie-break.
        let next = (0..spec.steps.len()).find(|&i| !done[i] && indegree[i] == 0);
        let Some(i) = next else {
            return Err(PlanError::Cycle);
        };
        done[i] = true;
        let step = &spec.steps[i];
        order.push(step);
        for (j, candidate) in spec.steps.iter().enumerate() {
            if !done[j] && candidate.depends_on.iter().any(|d| d == &step.name) {
                indegree[j] -= 1;
            }
        }
    }

    Ok(ExecutionPlan {
        steps: order
            .into_iter()
            .map(|s| PlannedStep {
                name: s.name.clone(),
                kind: s.kind,
                command: s.command.clone(),
                iterations: s.iterations,
            })
            .collect(),
    })
}

impl ExecutionPlan {
    /// Renders every step command against a workpackage assignment.
    pub fn render(
        &self,
        assignment: &BTreeMap<String, String>,
    ) -> Result<Vec<RenderedStep>, TemplateError> {
        self.steps
            .iter()
            .map(|s| {
                Ok(RenderedStep {
                    name: s.name.clone(),
                    kind: s.kind,
                    command: render_template(&s.command, assignment)?,
                    iterations: s.iterations,
                })
            })
            .collect()
    }
}
