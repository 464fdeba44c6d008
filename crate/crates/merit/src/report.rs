//! Tabular output: the per-run result table and the procurement evaluation
//! tables. Formatting is deterministic so identical campaigns produce
//! byte-identical tables.

use merit_core::format_float;
use merit_core::procurement::EvaluationReport;

use crate::store::StoredRecord;

/// Fixed column order: benchmark, tags, nodes, FOM seconds, status.
pub const RESULT_COLUMNS: [&str; 5] = ["benchmark", "tags", "nodes", "fom_s", "status"];

fn pad(text: &str, width: usize) -> String {
    format!("{text:<width$}")
}

fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    let render_row = |cells: &[String]| -> String {
        cells
            .iter()
            .enumerate()
            .map(|(i, c)| pad(c, widths[i]))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let header_cells: Vec<String> = header.iter().map(|h| h.to_string()).collect();
    out.push_str(&render_row(&header_cells));
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for row in rows {
        out.push_str(&render_row(row));
        out.push('\n');
    }
    out
}

fn tags_cell(tags: &std::collections::BTreeSet<String>) -> String {
    if tags.is_empty() {
        "-".to_string()
    } else {
        tags.iter().cloned().collect::<Vec<_>>().join(",")
    }
}

/// The run result table, one row per record in the given order.
pub fn result_table(records: &[&StoredRecord]) -> String {
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            vec![
                r.record.workpackage.benchmark.clone(),
                tags_cell(&r.record.workpackage.tags),
                r.record.workpackage.nodes.to_string(),
                r.record
                    .fom_seconds()
                    .map(format_float)
                    .unwrap_or_else(|| "-".to_string()),
                r.record.status.as_str().to_string(),
            ]
        })
        .collect();
    render_table(&RESULT_COLUMNS, &rows)
}

/// Proposal ranking, best value-for-money first.
pub fn evaluation_table(reports: &[EvaluationReport]) -> String {
    let mut ranked: Vec<&EvaluationReport> = reports.iter().collect();
    ranked.sort_by(|a, b| {
        b.value_for_money
            .partial_cmp(&a.value_for_money)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.proposal.cmp(&b.proposal))
    });
    let rows: Vec<Vec<String>> = ranked
        .iter()
        .enumerate()
        .map(|(i, r)| {
            vec![
                (i + 1).to_string(),
                r.proposal.clone(),
                format_float(r.tco_currency),
                format_float(r.weighted_value),
                format_float(r.value_for_money),
            ]
        })
        .collect();
    render_table(&["rank", "proposal", "tco", "value", "value_for_money"], &rows)
}

/// Per-benchmark evaluation detail as a delimiter-separated table.
pub fn evaluation_csv(reports: &[EvaluationReport]) -> String {
    let mut out = String::from(
        "proposal,benchmark,weight,normalized_throughput,high_scaling_ratio,chosen_variant\n",
    );
    for report in reports {
        for score in &report.scores {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                report.proposal,
                score.benchmark,
                format_float(score.weight),
                format_float(score.normalized_throughput),
                format_float(score.high_scaling_ratio),
                score.chosen_variant.as_deref().unwrap_or("-"),
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{BTreeMap, BTreeSet};

    use merit_core::expand::Workpackage;
    use merit_core::run::{RunRecord, RunStatus};

    use crate::store::StoredRecord;

    fn stored(benchmark: &str, nodes: u64, fom: f64) -> StoredRecord {
        StoredRecord {
            run_id: "r".to_string(),
            suite_version: "0".to_string(),
            system_fingerprint: "f".to_string(),
            record: RunRecord {
                workpackage: Workpackage {
                    benchmark: benchmark.to_string(),
                    assignment: BTreeMap::new(),
                    tags: BTreeSet::new(),
                    nodes,
                    workdir: String::new(),
                },
                started_at: String::new(),
                finished_at: String::new(),
                wall_seconds: fom,
                status: RunStatus::Success,
                raw_output: vec![],
                metrics: BTreeMap::from([
                    ("fom".to_string(), fom),
                    ("fom_seconds".to_string(), fom),
                ]),
                verification: vec![],
            },
        }
    }

    #[test]
    fn result_table_golden() {
        let records = [stored("amdahl-sleeper", 1, 90.0), stored("amdahl-sleeper", 2, 50.0)];
        let refs: Vec<&StoredRecord> = records.iter().collect();
        let expected = "\
benchmark       tags  nodes  fom_s  status
-------------------------------------------
amdahl-sleeper  -     1      90.0   success
amdahl-sleeper  -     2      50.0   success
";
        assert_eq!(result_table(&refs), expected);
    }
}
