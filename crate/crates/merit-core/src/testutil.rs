//! Shared builders for unit tests.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;

use crate::spec::{
    BenchmarkSpec, FomKind, FomSpec, ParamDef, ParamValue, ParameterSet, Step, StepKind,
};

pub(crate) fn minimal_spec(name: &str) -> BenchmarkSpec {
    BenchmarkSpec {
        name: name.to_string(),
        description: String::new(),
        parameter_sets: vec![ParameterSet {
            name: "main".to_string(),
            active_tags: BTreeSet::new(),
            parameters: BTreeMap::from([(
                "nodes".to_string(),
                ParamDef::Values(vec![ParamValue::Integer(8)]),
            )]),
        }],
        steps: vec![Step {
            name: "execute".to_string(),
            depends_on: vec![],
            command: "run -N ${nodes}".to_string(),
            kind: StepKind::Execute,
            iterations: 1,
        }],
        variants: vec![],
        fom: FomSpec {
            pattern: r"time=([0-9.]+) s".to_string(),
            unit: "s".to_string(),
            kind: FomKind::Time,
            work_units: None,
            lower_is_better: true,
        },
        verification: vec![],
        reference_nodes: 8,
    }
}

pub(crate) fn values(items: &[&str]) -> ParamDef {
    ParamDef::Values(items.iter().map(|s| ParamValue::Text(s.to_string())).collect())
}

pub(crate) fn step(name: &str, depends_on: &[&str], kind: StepKind) -> Step {
    Step {
        name: name.to_string(),
        depends_on: depends_on.iter().map(|s| s.to_string()).collect(),
        command: "true".to_string(),
        kind,
        iterations: 1,
    }
}

pub(crate) fn tags(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}
