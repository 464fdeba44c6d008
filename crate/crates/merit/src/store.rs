//! Append-only result store: newline-delimited self-describing records,
//! one JSON object per line, UTF-8, timestamps in RFC 3339 UTC.
//!
//! Appends never touch prior lines. A corrupt trailing line (torn write) is
//! quarantined to a side file and skipped, never fatal; the records before
//! it stay readable.

use std::collections::BTreeSet;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use merit_core::regression::{detect_regression, median_of_recent, Baseline, RegressionFinding};
use merit_core::run::RunRecord;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("duplicate run_id `{0}`")]
    DuplicateRunId(String),
    #[error("record failed to serialize: {0}")]
    Serialize(#[from] serde_json::Error),
    #[error("no passing records match ({benchmark}, tags, {nodes} nodes)")]
    NoMatchingRecords { benchmark: String, nodes: u64 },
}

/// A run record as persisted: campaign metadata plus the record itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredRecord {
    pub run_id: String,
    pub suite_version: String,
    pub system_fingerprint: String,
    #[serde(flatten)]
    pub record: RunRecord,
}

impl StoredRecord {
    pub fn group_key(&self) -> (String, BTreeSet<String>, u64) {
        (
            self.record.workpackage.benchmark.clone(),
            self.record.workpackage.tags.clone(),
            self.record.workpackage.nodes,
        )
    }
}

/// Host identity stamped into each record.
pub fn system_fingerprint() -> String {
    let host = std::env::var("HOSTNAME").unwrap_or_else(|_| "unknown-host".to_string());
    format!("{host}/{}-{}", std::env::consts::OS, std::env::consts::ARCH)
}

/// The persistent store. Reads load the whole history (procurement-scale
/// histories are small); appends go straight to disk.
pub struct Store {
    path: PathBuf,
    records: Vec<StoredRecord>,
    ids: BTreeSet<String>,
    /// Lines that failed to parse on load and were copied to the
    /// quarantine file.
    pub quarantined_lines: usize,
}

impl Store {
    /// Opens (or begins) a store at `path`. Unparseable lines are appended
    /// to `<path>.quarantine` with their line numbers and skipped.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let path = path.into();
        let mut store = Store {
            path: path.clone(),
            records: Vec::new(),
            ids: BTreeSet::new(),
            quarantined_lines: 0,
        };
        if !path.exists() {
            return Ok(store);
        }
        let text = fs::read_to_string(&path).map_err(|source| StoreError::Io {
            path: path.clone(),
            source,
        })?;
        let mut quarantine: Vec<String> = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<StoredRecord>(line) {
                Ok(record) => {
                    store.ids.insert(record.run_id.clone());
                    store.records.push(record);
                }
                Err(_) => quarantine.push(format!("line {}: {line}", idx + 1)),
            }
        }
        if !quarantine.is_empty() {
            store.quarantined_lines = quarantine.len();
            let quarantine_path = quarantine_path(&path);
            let mut file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(&quarantine_path)
                .map_err(|source| StoreError::Io {
                    path: quarantine_path.clone(),
                    source,
                })?;
            for line in quarantine {
                let _ = writeln!(file, "{line}");
            }
        }
        Ok(store)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn records(&self) -> &[StoredRecord] {
        &self.records
    }

    pub fn get(&self, run_id: &str) -> Option<&StoredRecord> {
        self.records.iter().find(|r| r.run_id == run_id)
    }

    /// Durably appends one record and returns its identifier. Prior records
    /// are untouched; if the file ends mid-line after a torn write, a
    /// newline is inserted first so the new record stays parseable.
    pub fn append(&mut self, record: StoredRecord) -> Result<String, StoreError> {
        if self.ids.contains(&record.run_id) {
            return Err(StoreError::DuplicateRunId(record.run_id));
        }
        let mut line = serde_json::to_string(&record)?;
        line.push('\n');

        if let Some(parent) = self.path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent).map_err(|source| StoreError::Io {
                    path: parent.to_path_buf(),
                    source,
                })?;
            }
        }
        let needs_newline = fs::read(&self.path)
            .map(|bytes| !bytes.is_empty() && bytes.last() != Some(&b'\n'))
            .unwrap_or(false);
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|source| StoreError::Io {
                path: self.path.clone(),
                source,
            })?;
        if needs_newline {
            file.write_all(b"\n").map_err(|source| StoreError::Io {
                path: self.path.clone(),
                source,
            })?;
        }
        file.write_all(line.as_bytes())
            .map_err(|source| StoreError::Io {
                path: self.path.clone(),
                source,
            })?;
        file.sync_data().ok();

        let run_id = record.run_id.clone();
        self.ids.insert(run_id.clone());
        self.records.push(record);
        Ok(run_id)
    }

    /// Passing runtimes of one (benchmark, tags, nodes) group, oldest first.
    fn passing_runtimes(
        &self,
        benchmark: &str,
        tags: &BTreeSet<String>,
        nodes: u64,
        before: Option<&str>,
    ) -> Vec<f64> {
        self.records
            .iter()
            .take_while(|r| before.is_none_or(|id| r.run_id != id))
            .filter(|r| {
                r.record.passed()
                    && r.record.workpackage.benchmark == benchmark
                    && r.record.workpackage.tags == *tags
                    && r.record.workpackage.nodes == nodes
            })
            .filter_map(|r| r.record.fom_seconds())
            .collect()
    }

    /// Median of the most recent `window` passing runs of a group.
    pub fn compute_baseline(
        &self,
        benchmark: &str,
        tags: &BTreeSet<String>,
        nodes: u64,
        window: usize,
    ) -> Result<Baseline, StoreError> {
        self.baseline_inner(benchmark, tags, nodes, window, None)
    }

    fn baseline_inner(
        &self,
        benchmark: &str,
        tags: &BTreeSet<String>,
        nodes: u64,
        window: usize,
        before: Option<&str>,
    ) -> Result<Baseline, StoreError> {
        let runtimes = self.passing_runtimes(benchmark, tags, nodes, before);
        let baseline_seconds =
            median_of_recent(&runtimes, window).ok_or(StoreError::NoMatchingRecords {
                benchmark: benchmark.to_string(),
                nodes,
            })?;
        Ok(Baseline {
            benchmark: benchmark.to_string(),
            tags: tags.clone(),
            nodes,
            window,
            baseline_seconds,
        })
    }

    /// Distinct (benchmark, tags, nodes) groups in first-seen order.
    pub fn groups(&self) -> Vec<(String, BTreeSet<String>, u64)> {
        let mut seen = BTreeSet::new();
        let mut groups = Vec::new();
        for record in &self.records {
            let key = record.group_key();
            if seen.insert(key.clone()) {
                groups.push(key);
            }
        }
        groups
    }

    /// Regression check for one group: the newest passing record is graded
    /// against the baseline of the passing runs before it. `None` when the
    /// group has no passing run or nothing to compare against.
    pub fn check_group(
        &self,
        benchmark: &str,
        tags: &BTreeSet<String>,
        nodes: u64,
        window: usize,
        threshold: f64,
    ) -> Option<RegressionFinding> {
        let latest = self.records.iter().rev().find(|r| {
            r.record.passed()
                && r.record.workpackage.benchmark == benchmark
                && r.record.workpackage.tags == *tags
                && r.record.workpackage.nodes == nodes
        })?;
        let runtime = latest.record.fom_seconds()?;
        let baseline = self
            .baseline_inner(benchmark, tags, nodes, window, Some(latest.run_id.as_str()))
            .ok()?;
        Some(detect_regression(
            latest.run_id.clone(),
            runtime,
            &baseline,
            threshold,
        ))
    }
}

fn quarantine_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".quarantine");
    path.with_file_name(name)
}

/// Builds a stored record around a run record.
pub fn stored(run_id: impl Into<String>, record: RunRecord) -> StoredRecord {
    StoredRecord {
        run_id: run_id.into(),
        suite_version: env!("CARGO_PKG_VERSION").to_string(),
        system_fingerprint: system_fingerprint(),
        record,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    use merit_core::expand::Workpackage;
    use merit_core::run::{RunRecord, RunStatus};

    pub(crate) fn record(benchmark: &str, nodes: u64, fom_seconds: f64, passed: bool) -> RunRecord {
        let mut metrics = BTreeMap::new();
        metrics.insert("fom".to_string(), fom_seconds);
        metrics.insert("fom_seconds".to_string(), fom_seconds);
        RunRecord {
            workpackage: Workpackage {
                benchmark: benchmark.to_string(),
                assignment: BTreeMap::new(),
                tags: BTreeSet::new(),
                nodes,
                workdir: format!("{benchmark}/0000"),
            },
            started_at: "2026-01-01T00:00:00.000Z".to_string(),
            finished_at: "2026-01-01T00:00:01.000Z".to_string(),
            wall_seconds: fom_seconds,
            status: if passed {
                RunStatus::Success
            } else {
                RunStatus::StepFailure
            },
            raw_output: vec![],
            metrics,
            verification: vec![],
        }
    }

    #[test]
    fn append_then_query_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.ndjson");
        let mut store = Store::open(&path).unwrap();
        let rec = stored("r1", record("demo", 8, 100.0, true));
        store.append(rec.clone()).unwrap();

        let reloaded = Store::open(&path).unwrap();
        assert_eq!(reloaded.get("r1"), Some(&rec));
    }

    #[test]
    fn duplicate_run_id_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = Store::open(dir.path().join("s.ndjson")).unwrap();
        store.append(stored("r1", record("demo", 8, 1.0, true))).unwrap();
        let err = store
            .append(stored("r1", record("demo", 8, 2.0, true)))
            .unwrap_err();
        assert!(matches!(err, StoreError::DuplicateRunId(_)));
    }

    #[test]
    fn appends_are_append_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.ndjson");
        let mut store = Store::open(&path).unwrap();
        store.append(stored("r1", record("demo", 8, 1.0, true))).unwrap();
        let first = fs::read_to_string(&path).unwrap();
        store.append(stored("r2", record("demo", 8, 2.0, true))).unwrap();
        let both = fs::read_to_string(&path).unwrap();
        assert!(both.starts_with(&first), "existing bytes were rewritten");
        assert_eq!(both.lines().count(), 2);
    }

    #[test]
    fn torn_trailing_line_is_quarantined_not_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.ndjson");
        let mut store = Store::open(&path).unwrap();
        store.append(stored("r1", record("demo", 8, 1.0, true))).unwrap();
        // Simulate a torn write: half a record, no newline.
        let mut file = OpenOptions::new().append(true).open(&path).unwrap();
        file.write_all(b"{\"run_id\":\"r2\",\"trunc").unwrap();
        drop(file);

        let mut reopened = Store::open(&path).unwrap();
        assert_eq!(reopened.quarantined_lines, 1);
        assert_eq!(reopened.records().len(), 1);
        assert!(quarantine_path(&path).exists());

        // Appending after the torn line keeps the store parseable.
        reopened.append(stored("r3", record("demo", 8, 3.0, true))).unwrap();
        let reloaded = Store::open(&path).unwrap();
        assert!(reloaded.get("r3").is_some());
    }

    #[test]
    fn thousand_records_all_come_back() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.ndjson");
        let mut store = Store::open(&path).unwrap();
        for i in 0..1000 {
            store
                .append(stored(
                    format!("r{i}"),
                    record("demo", 8, 100.0 + (i % 7) as f64, i % 5 != 0),
                ))
                .unwrap();
        }
        assert_eq!(Store::open(&path).unwrap().records().len(), 1000);
    }

    #[test]
    fn baseline_is_median_of_recent_passing() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = Store::open(dir.path().join("s.ndjson")).unwrap();
        for (i, t) in [100.0, 102.0, 98.0].iter().enumerate() {
            store.append(stored(format!("r{i}"), record("demo", 8, *t, true))).unwrap();
        }
        let baseline = store
            .compute_baseline("demo", &BTreeSet::new(), 8, 3)
            .unwrap();
        assert_eq!(baseline.baseline_seconds, 100.0);
        let last_only = store
            .compute_baseline("demo", &BTreeSet::new(), 8, 1)
            .unwrap();
        assert_eq!(last_only.baseline_seconds, 98.0);
    }

    #[test]
    fn failed_runs_never_change_baselines() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = Store::open(dir.path().join("s.ndjson")).unwrap();
        for (i, t) in [100.0, 102.0, 98.0].iter().enumerate() {
            store.append(stored(format!("r{i}"), record("demo", 8, *t, true))).unwrap();
        }
        let before = store
            .compute_baseline("demo", &BTreeSet::new(), 8, 5)
            .unwrap();
        for i in 0..4 {
            store
                .append(stored(format!("f{i}"), record("demo", 8, 9999.0, false)))
                .unwrap();
        }
        let after = store
            .compute_baseline("demo", &BTreeSet::new(), 8, 5)
            .unwrap();
        assert_eq!(before.baseline_seconds, after.baseline_seconds);
    }

    #[test]
    fn group_check_excludes_the_record_under_test() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = Store::open(dir.path().join("s.ndjson")).unwrap();
        for (i, t) in [100.0, 102.0, 98.0, 106.0].iter().enumerate() {
            store.append(stored(format!("r{i}"), record("demo", 8, *t, true))).unwrap();
        }
        let finding = store
            .check_group("demo", &BTreeSet::new(), 8, 5, 0.05)
            .unwrap();
        assert_eq!(finding.baseline.baseline_seconds, 100.0);
        assert!((finding.relative_slowdown - 0.06).abs() < 1e-12);
    }

    #[test]
    fn no_baseline_when_group_has_single_record() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = Store::open(dir.path().join("s.ndjson")).unwrap();
        store.append(stored("r0", record("demo", 8, 100.0, true))).unwrap();
        assert!(store
            .check_group("demo", &BTreeSet::new(), 8, 5, 0.05)
            .is_none());
    }
}
