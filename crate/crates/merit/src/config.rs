//! Concrete file formats: benchmark definitions, platform profiles, and
//! procurement model files. All three use TOML; the logical schema lives in
//! `merit-core` and stays serialization-agnostic.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use merit_core::procurement::{Commitment, ReferenceEntry, SystemModel};
use merit_core::spec::{
    validate_suite, BackendKind, BenchmarkSpec, Finding, PlatformProfile,
};

/// Extension for benchmark definition files.
pub const DEFINITION_EXTENSION: &str = "toml";
/// Platform profiles file inside a definitions directory.
pub const PLATFORMS_FILE: &str = "platforms.toml";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Syntax { path: PathBuf, message: String },
    #[error("{0} validation finding(s):\n{1}")]
    Invalid(usize, String),
    #[error("serialization failed: {0}")]
    Serialize(#[from] toml::ser::Error),
}

fn syntax_error(path: &Path, err: toml::de::Error) -> ConfigError {
    // toml errors carry line/column context in their message.
    ConfigError::Syntax {
        path: path.to_path_buf(),
        message: err.to_string(),
    }
}

fn invalid(findings: Vec<Finding>) -> ConfigError {
    let text = findings
        .iter()
        .map(|f| format!("  - {f}"))
        .collect::<Vec<_>>()
        .join("\n");
    ConfigError::Invalid(findings.len(), text)
}

/// Parses one benchmark definition document and checks every invariant.
/// Rejection is total: on any finding the document yields an error, never a
/// partially constructed spec.
pub fn parse_spec(text: &str) -> Result<BenchmarkSpec, ConfigError> {
    parse_spec_at(Path::new("<inline>"), text)
}

fn parse_spec_at(path: &Path, text: &str) -> Result<BenchmarkSpec, ConfigError> {
    let spec: BenchmarkSpec = toml::from_str(text).map_err(|e| syntax_error(path, e))?;
    let findings = spec.validate();
    if findings.is_empty() {
        Ok(spec)
    } else {
        Err(invalid(findings))
    }
}

/// Serializes a spec back to the definition syntax.
/// `parse_spec(serialize_spec(s)) == s` for every valid spec.
pub fn serialize_spec(spec: &BenchmarkSpec) -> Result<String, ConfigError> {
    Ok(toml::to_string_pretty(spec)?)
}

/// Loads every `*.toml` definition in a directory (sorted by file name,
/// `platforms.toml` excluded) and validates the suite as a whole.
pub fn load_definitions(dir: &Path) -> Result<Vec<BenchmarkSpec>, ConfigError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|source| ConfigError::Io {
            path: dir.to_path_buf(),
            source,
        })?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().and_then(|e| e.to_str()) == Some(DEFINITION_EXTENSION)
                && p.file_name().and_then(|n| n.to_str()) != Some(PLATFORMS_FILE)
        })
        .collect();
    paths.sort();

    let mut specs = Vec::with_capacity(paths.len());
    for path in &paths {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.clone(),
            source,
        })?;
        let spec: BenchmarkSpec = toml::from_str(&text).map_err(|e| syntax_error(path, e))?;
        specs.push(spec);
    }
    let findings = validate_suite(&specs);
    if findings.is_empty() {
        Ok(specs)
    } else {
        Err(invalid(findings))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PlatformsFile {
    #[serde(rename = "platform", default)]
    platforms: Vec<PlatformProfile>,
}

/// Built-in profiles, available without any `platforms.toml`:
/// a subprocess-spawning `local` and the deterministic `simulated` backend.
pub fn builtin_platforms() -> Vec<PlatformProfile> {
    let template = "${command}".to_string();
    vec![
        PlatformProfile {
            name: "local".to_string(),
            backend: BackendKind::Local,
            submission_template: template.clone(),
            environment: Default::default(),
            devices_per_node: 1,
            device_memory_bytes: 8_000_000_000,
        },
        PlatformProfile {
            name: "simulated".to_string(),
            backend: BackendKind::Simulated,
            submission_template: template,
            environment: Default::default(),
            devices_per_node: 4,
            device_memory_bytes: 40_000_000_000,
        },
    ]
}

/// Built-in profiles plus any from `<dir>/platforms.toml`; file entries
/// override built-ins of the same name.
pub fn load_platforms(dir: &Path) -> Result<Vec<PlatformProfile>, ConfigError> {
    let mut platforms = builtin_platforms();
    let path = dir.join(PLATFORMS_FILE);
    if path.exists() {
        let text = fs::read_to_string(&path).map_err(|source| ConfigError::Io {
            path: path.clone(),
            source,
        })?;
        let file: PlatformsFile = toml::from_str(&text).map_err(|e| syntax_error(&path, e))?;
        let mut findings = Vec::new();
        for profile in file.platforms {
            findings.extend(profile.validate());
            match platforms.iter_mut().find(|p| p.name == profile.name) {
                Some(slot) => *slot = profile,
                None => platforms.push(profile),
            }
        }
        if !findings.is_empty() {
            return Err(invalid(findings));
        }
    }
    Ok(platforms)
}

/// One proposal in a procurement model: the system plus its committed
/// runtimes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProposalEntry {
    pub system: SystemModel,
    #[serde(rename = "commitment", default)]
    pub commitments: Vec<Commitment>,
}

/// A procurement model file: the reference system, the weighted reference
/// workloads, and one or more proposals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcurementModel {
    pub reference_system: SystemModel,
    #[serde(rename = "reference", default)]
    pub references: Vec<ReferenceEntry>,
    #[serde(rename = "proposal", default)]
    pub proposals: Vec<ProposalEntry>,
}

pub fn parse_procurement_model(text: &str) -> Result<ProcurementModel, ConfigError> {
    let model: ProcurementModel =
        toml::from_str(text).map_err(|e| syntax_error(Path::new("<inline>"), e))?;
    Ok(model)
}

pub fn load_procurement_model(path: &Path) -> Result<ProcurementModel, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let model: ProcurementModel = toml::from_str(&text).map_err(|e| syntax_error(path, e))?;
    Ok(model)
}

/// Requested tag set from a comma-separated list.
pub fn parse_tags<S: AsRef<str>>(raw: &[S]) -> BTreeSet<String> {
    raw.iter()
        .flat_map(|s| s.as_ref().split(','))
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}
