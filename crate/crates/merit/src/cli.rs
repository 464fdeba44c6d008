//! The `merit` command line: campaigns, scaling analysis, procurement
//! evaluation, stored-result reports, and CI regression checks.
//!
//! Exit codes: 0 success, 1 benchmark or regression failure, 2 usage/spec
//! error.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::Utc;
use clap::{Args, Parser, Subcommand, ValueEnum};

use merit_core::expand::expand_parameters;
use merit_core::plan::plan;
use merit_core::procurement::evaluate_value_for_money;
use merit_core::regression::Severity;
use merit_core::scaling::{
    fit_amdahl, relative_series, series_from_csv, series_to_csv, strong_speedup_efficiency,
    weak_efficiency, ScalingMode, ScalingSeries,
};
use merit_core::spec::{BackendKind, BenchmarkSpec, PlatformProfile};
use merit_core::{format_float, mix_seed};

use crate::analyze::series_from_store;
use crate::backend::{Backend, LocalBackend, SimulatedBackend};
use crate::config::{
    load_definitions, load_platforms, load_procurement_model, parse_tags, ProcurementModel,
};
use crate::engine::{execute, ExecuteOptions};
use crate::report::{evaluation_csv, evaluation_table, result_table};
use crate::schema_doc::schema_reference;
use crate::store::{stored, Store, StoredRecord};

pub const EXIT_OK: i32 = 0;
pub const EXIT_BENCH_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// What a command produced: an exit status, a printable summary, and the
/// files it wrote.
#[derive(Debug, Clone)]
pub struct CommandOutcome {
    pub exit_status: i32,
    pub summary: String,
    pub artifacts: Vec<PathBuf>,
}

impl CommandOutcome {
    fn ok(summary: impl Into<String>) -> Self {
        CommandOutcome {
            exit_status: EXIT_OK,
            summary: summary.into(),
            artifacts: Vec::new(),
        }
    }

    fn usage_error(summary: impl Into<String>) -> Self {
        CommandOutcome {
            exit_status: EXIT_USAGE,
            summary: summary.into(),
            artifacts: Vec::new(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "merit",
    version,
    about = "Benchmark orchestration, scaling analysis, and procurement evaluation"
)]
pub struct Cli {
    #[command(flatten)]
    pub globals: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Directory of benchmark definition files.
    #[arg(long, global = true, default_value = "definitions")]
    pub definitions: PathBuf,
    /// Platform profile to execute on.
    #[arg(long, global = true, default_value = "simulated")]
    pub platform: String,
    /// Tags selecting parameter-set versions (comma-separated, repeatable).
    #[arg(long, global = true, value_delimiter = ',')]
    pub tags: Vec<String>,
    /// Result store path; defaults to <output-dir>/store.ndjson.
    #[arg(long, global = true)]
    pub store: Option<PathBuf>,
    /// Every artifact lands under this directory.
    #[arg(long, global = true, default_value = "bench-out")]
    pub output_dir: PathBuf,
    /// Seed for the simulated backend and seeded workloads.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Upper bound on concurrently running workpackages.
    #[arg(long, global = true, default_value_t = 4)]
    pub max_parallel: usize,
}

impl GlobalOpts {
    pub fn store_path(&self) -> PathBuf {
        self.store
            .clone()
            .unwrap_or_else(|| self.output_dir.join("store.ndjson"))
    }

    fn tag_set(&self) -> BTreeSet<String> {
        parse_tags(&self.tags)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Strong,
    Weak,
}

impl From<ModeArg> for ScalingMode {
    fn from(mode: ModeArg) -> Self {
        match mode {
            ModeArg::Strong => ScalingMode::Strong,
            ModeArg::Weak => ScalingMode::Weak,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run benchmark definitions over their parameter spaces and record the
    /// results.
    Run {
        /// Restrict the campaign to these benchmarks (default: all).
        #[arg(long)]
        benchmark: Vec<String>,
    },
    /// Emit relative-runtime and efficiency tables for one benchmark.
    Analyze {
        #[arg(long)]
        benchmark: Option<String>,
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Analyze a series file instead of the store.
        #[arg(long)]
        series: Option<PathBuf>,
        /// Reference node count; defaults to the definition's value, then
        /// the smallest measured node count.
        #[arg(long)]
        reference_nodes: Option<u64>,
    },
    /// Evaluate system proposals in a procurement model file.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
    },
    /// Print the stored results as a table.
    Report,
    /// Continuous-benchmarking entry points.
    Ci {
        #[command(subcommand)]
        command: CiCommand,
    },
    /// Validate the definitions directory and platform profiles.
    Validate,
    /// Print (or write) the definition-schema reference document.
    Schema {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum CiCommand {
    /// Grade the newest run of every group against its baseline.
    Check {
        #[arg(long, default_value_t = merit_core::regression::DEFAULT_WINDOW)]
        window: usize,
        #[arg(long, default_value_t = merit_core::regression::DEFAULT_THRESHOLD)]
        threshold: f64,
    },
}

pub fn dispatch(cli: &Cli) -> CommandOutcome {
    match &cli.command {
        Command::Run { benchmark } => cmd_run(&cli.globals, benchmark),
        Command::Analyze {
            benchmark,
            mode,
            series,
            reference_nodes,
        } => cmd_analyze(
            &cli.globals,
            benchmark.as_deref(),
            (*mode).into(),
            series.as_deref(),
            *reference_nodes,
        ),
        Command::Evaluate { model } => cmd_evaluate(&cli.globals, model),
        Command::Report => cmd_report(&cli.globals),
        Command::Ci {
            command: CiCommand::Check { window, threshold },
        } => cmd_ci_check(&cli.globals, *window, *threshold),
        Command::Validate => cmd_validate(&cli.globals),
        Command::Schema { out } => cmd_schema(out.as_deref()),
    }
}

fn backend_for(
    profile: &PlatformProfile,
    seed: u64,
) -> Result<Box<dyn Backend>, CommandOutcome> {
    match profile.backend {
        BackendKind::Local => Ok(Box::new(LocalBackend::new())),
        BackendKind::Simulated => Ok(Box::new(SimulatedBackend::new(seed))),
        BackendKind::ExternalScheduler => Err(CommandOutcome::usage_error(format!(
            "platform `{}`: the external-scheduler backend is declaration-only; \
             use it to render submission templates, not to execute",
            profile.name
        ))),
    }
}

/// A fresh campaign identifier; never reuses an existing runs/ entry.
fn fresh_run_id(output_dir: &Path) -> String {
    let stamp = Utc::now().format("%Y%m%d-%H%M%S");
    for counter in 0u32.. {
        let candidate = format!("{stamp}-{counter:02}");
        if !output_dir.join("runs").join(&candidate).exists() {
            return candidate;
        }
    }
    unreachable!("run id space exhausted");
}

pub fn cmd_run(globals: &GlobalOpts, benchmarks: &[String]) -> CommandOutcome {
    let specs = match load_definitions(&globals.definitions) {
        Ok(specs) => specs,
        Err(e) => return CommandOutcome::usage_error(format!("definitions: {e}")),
    };
    let selected: Vec<&BenchmarkSpec> = if benchmarks.is_empty() {
        specs.iter().collect()
    } else {
        let mut selected = Vec::new();
        for name in benchmarks {
            match specs.iter().find(|s| &s.name == name) {
                Some(spec) => selected.push(spec),
                None => {
                    return CommandOutcome::usage_error(format!(
                        "unknown benchmark `{name}` (have: {})",
                        specs.iter().map(|s| s.name.as_str()).collect::<Vec<_>>().join(", ")
                    ))
                }
            }
        }
        selected
    };

    let platforms = match load_platforms(&globals.definitions) {
        Ok(p) => p,
        Err(e) => return CommandOutcome::usage_error(format!("platforms: {e}")),
    };
    let Some(profile) = platforms.iter().find(|p| p.name == globals.platform) else {
        return CommandOutcome::usage_error(format!(
            "unknown platform `{}` (have: {})",
            globals.platform,
            platforms.iter().map(|p| p.name.as_str()).collect::<Vec<_>>().join(", ")
        ));
    };
    let backend = match backend_for(profile, globals.seed) {
        Ok(b) => b,
        Err(outcome) => return outcome,
    };

    let mut store = match Store::open(globals.store_path()) {
        Ok(s) => s,
        Err(e) => return CommandOutcome::usage_error(format!("store: {e}")),
    };

    let run_id = fresh_run_id(&globals.output_dir);
    let tags = globals.tag_set();
    let environment: Vec<(String, String)> = profile
        .environment
        .iter()
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();

    let mut campaign: Vec<StoredRecord> = Vec::new();
    for spec in selected {
        let tags = spec.resolve_tags(&tags);
        let workpackages = match expand_parameters(spec, &tags) {
            Ok(wps) => wps,
            Err(e) => return CommandOutcome::usage_error(format!("{}: {e}", spec.name)),
        };
        let the_plan = match plan(spec) {
            Ok(p) => p,
            Err(e) => return CommandOutcome::usage_error(format!("{}: {e}", spec.name)),
        };
        let options = ExecuteOptions {
            output_dir: globals.output_dir.clone(),
            run_id: run_id.clone(),
            max_parallel: globals.max_parallel.max(1),
            environment: environment.clone(),
            submission_template: profile.submission_template.clone(),
            definitions_dir: Some(globals.definitions.clone()),
            seed: mix_seed(globals.seed, merit_core::fnv1a(spec.name.as_bytes())),
        };
        let records = match execute(spec, &the_plan, &workpackages, backend.as_ref(), &options) {
            Ok(records) => records,
            Err(e) => return CommandOutcome::usage_error(format!("{}: {e}", spec.name)),
        };
        for (index, record) in records.into_iter().enumerate() {
            campaign.push(stored(format!("{run_id}-{}-{index:04}", spec.name), record));
        }
    }

    for record in &campaign {
        if let Err(e) = store.append(record.clone()) {
            return CommandOutcome::usage_error(format!("store: {e}"));
        }
    }

    let refs: Vec<&StoredRecord> = campaign.iter().collect();
    let table = result_table(&refs);
    let table_path = globals
        .output_dir
        .join("runs")
        .join(&run_id)
        .join("result-table.txt");
    let mut artifacts = vec![globals.store_path()];
    if fs::create_dir_all(table_path.parent().expect("table path has a parent")).is_ok()
        && fs::write(&table_path, &table).is_ok()
    {
        artifacts.push(table_path);
    }

    let failures = campaign.iter().filter(|r| !r.record.passed()).count();
    let exit_status = if failures > 0 { EXIT_BENCH_FAILURE } else { EXIT_OK };
    CommandOutcome {
        exit_status,
        summary: format!(
            "run {run_id}: {} workpackage(s), {failures} failure(s)\n\n{table}",
            campaign.len()
        ),
        artifacts,
    }
}

pub fn cmd_validate(globals: &GlobalOpts) -> CommandOutcome {
    let definitions = load_definitions(&globals.definitions);
    let platforms = load_platforms(&globals.definitions);
    match (definitions, platforms) {
        (Ok(specs), Ok(platforms)) => CommandOutcome::ok(format!(
            "{} definition(s) and {} platform profile(s) valid",
            specs.len(),
            platforms.len()
        )),
        (Err(e), _) => CommandOutcome::usage_error(format!("definitions: {e}")),
        (_, Err(e)) => CommandOutcome::usage_error(format!("platforms: {e}")),
    }
}

fn reference_nodes_from_definitions(globals: &GlobalOpts, benchmark: &str) -> Option<u64> {
    load_definitions(&globals.definitions)
        .ok()?
        .into_iter()
        .find(|s| s.name == benchmark)
        .map(|s| s.reference_nodes)
}

pub fn cmd_analyze(
    globals: &GlobalOpts,
    benchmark: Option<&str>,
    mode: ScalingMode,
    series_file: Option<&Path>,
    reference_nodes: Option<u64>,
) -> CommandOutcome {
    let series: ScalingSeries = if let Some(path) = series_file {
        let name = benchmark
            .map(str::to_string)
            .or_else(|| {
                path.file_stem()
                    .and_then(|s| s.to_str())
                    .map(str::to_string)
            })
            .unwrap_or_else(|| "series".to_string());
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                return CommandOutcome::usage_error(format!("{}: {e}", path.display()))
            }
        };
        match series_from_csv(name, mode, &text) {
            Ok(s) => s,
            Err(e) => {
                return CommandOutcome::usage_error(format!("{}: {e}", path.display()))
            }
        }
    } else {
        let Some(benchmark) = benchmark else {
            return CommandOutcome::usage_error(
                "analyze needs --benchmark (with --store) or --series <file>",
            );
        };
        let store = match Store::open(globals.store_path()) {
            Ok(s) => s,
            Err(e) => return CommandOutcome::usage_error(format!("store: {e}")),
        };
        let reference =
            reference_nodes.or_else(|| reference_nodes_from_definitions(globals, benchmark));
        match series_from_store(&store, benchmark, &globals.tag_set(), mode, reference) {
            Ok(s) => s,
            Err(e) => return CommandOutcome::usage_error(format!("analyze: {e}")),
        }
    };

    let analysis_dir = globals.output_dir.join("analysis");
    if let Err(e) = fs::create_dir_all(&analysis_dir) {
        return CommandOutcome::usage_error(format!("{}: {e}", analysis_dir.display()));
    }
    let mut artifacts = Vec::new();
    let mut write_artifact = |name: String, contents: &str| -> Option<PathBuf> {
        let path = analysis_dir.join(name);
        fs::write(&path, contents).ok()?;
        artifacts.push(path.clone());
        Some(path)
    };

    // The series itself, re-importable by this same command.
    write_artifact(
        format!("{}-series.csv", series.benchmark()),
        &series_to_csv(&series),
    );

    let mut relative_csv = String::from("rel_nodes,rel_runtime\n");
    let mut summary = format!(
        "benchmark {} ({} point(s), reference {} nodes)\n\nrel_nodes  rel_runtime\n",
        series.benchmark(),
        series.points().len(),
        series.reference().nodes
    );
    for (nodes, runtime) in relative_series(&series) {
        relative_csv.push_str(&format!(
            "{},{}\n",
            format_float(nodes),
            format_float(runtime)
        ));
        summary.push_str(&format!(
            "{:<9}  {}\n",
            format_float(nodes),
            format_float(runtime)
        ));
    }
    write_artifact(
        format!("{}-relative.csv", series.benchmark()),
        &relative_csv,
    );

    match mode {
        ScalingMode::Strong => {
            let rows = match strong_speedup_efficiency(&series) {
                Ok(rows) => rows,
                Err(e) => return CommandOutcome::usage_error(format!("analyze: {e}")),
            };
            let mut csv = String::from("nodes,speedup,efficiency\n");
            for row in &rows {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    row.nodes,
                    format_float(row.speedup),
                    format_float(row.efficiency)
                ));
            }
            write_artifact(format!("{}-efficiency.csv", series.benchmark()), &csv);
            if let Ok(fit) = fit_amdahl(&series) {
                summary.push_str(&format!(
                    "\nruntime model fit: serial {} s, parallel {} s, residual {}\n",
                    format_float(fit.serial_seconds),
                    format_float(fit.parallel_seconds),
                    format_float(fit.residual)
                ));
            }
        }
        ScalingMode::Weak => {
            let rows = match weak_efficiency(&series) {
                Ok(rows) => rows,
                Err(e) => return CommandOutcome::usage_error(format!("analyze: {e}")),
            };
            let mut csv = String::from("nodes,efficiency\n");
            for (nodes, efficiency) in &rows {
                csv.push_str(&format!("{},{}\n", nodes, format_float(*efficiency)));
            }
            write_artifact(format!("{}-efficiency.csv", series.benchmark()), &csv);
        }
    }

    CommandOutcome {
        exit_status: EXIT_OK,
        summary,
        artifacts,
    }
}

pub fn cmd_evaluate(globals: &GlobalOpts, model_path: &Path) -> CommandOutcome {
    let model: ProcurementModel = match load_procurement_model(model_path) {
        Ok(m) => m,
        Err(e) => return CommandOutcome::usage_error(format!("model: {e}")),
    };
    if model.proposals.is_empty() {
        return CommandOutcome::usage_error("model lists no proposals");
    }

    let mut reports = Vec::with_capacity(model.proposals.len());
    for proposal in &model.proposals {
        match evaluate_value_for_money(
            &model.references,
            &proposal.commitments,
            &proposal.system,
            &model.reference_system,
        ) {
            Ok(report) => reports.push(report),
            Err(e) => {
                return CommandOutcome::usage_error(format!(
                    "proposal `{}`: {e}",
                    proposal.system.name
                ))
            }
        }
    }

    let eval_dir = globals.output_dir.join("evaluation");
    let mut artifacts = Vec::new();
    if fs::create_dir_all(&eval_dir).is_ok() {
        let csv_path = eval_dir.join("evaluation.csv");
        if fs::write(&csv_path, evaluation_csv(&reports)).is_ok() {
            artifacts.push(csv_path);
        }
        let table_path = eval_dir.join("ranking.txt");
        if fs::write(&table_path, evaluation_table(&reports)).is_ok() {
            artifacts.push(table_path);
        }
    }

    let mut summary = evaluation_table(&reports);
    for report in &reports {
        for warning in &report.warnings {
            summary.push_str(&format!("warning: {}: {warning}\n", report.proposal));
        }
    }
    CommandOutcome {
        exit_status: EXIT_OK,
        summary,
        artifacts,
    }
}

pub fn cmd_report(globals: &GlobalOpts) -> CommandOutcome {
    let store = match Store::open(globals.store_path()) {
        Ok(s) => s,
        Err(e) => return CommandOutcome::usage_error(format!("store: {e}")),
    };
    if store.records().is_empty() {
        return CommandOutcome::ok("store is empty");
    }
    let refs: Vec<&StoredRecord> = store.records().iter().collect();
    CommandOutcome::ok(result_table(&refs))
}

pub fn cmd_ci_check(globals: &GlobalOpts, window: usize, threshold: f64) -> CommandOutcome {
    if window == 0 || threshold.is_nan() || threshold <= 0.0 {
        return CommandOutcome::usage_error("ci check needs window >= 1 and threshold > 0");
    }
    let store = match Store::open(globals.store_path()) {
        Ok(s) => s,
        Err(e) => return CommandOutcome::usage_error(format!("store: {e}")),
    };
    if store.records().is_empty() {
        return CommandOutcome::ok("store is empty; nothing to check");
    }

    let mut summary = String::new();
    let mut failures = 0usize;
    for (benchmark, tags, nodes) in store.groups() {
        let group_label = format!(
            "{benchmark} [{}] @ {nodes} node(s)",
            if tags.is_empty() {
                "-".to_string()
            } else {
                tags.iter().cloned().collect::<Vec<_>>().join(",")
            }
        );
        match store.check_group(&benchmark, &tags, nodes, window, threshold) {
            Some(finding) => {
                if finding.severity == Severity::Fail {
                    failures += 1;
                }
                summary.push_str(&format!(
                    "{}: {group_label}: {}\n",
                    finding.severity.as_str(),
                    finding.detail
                ));
            }
            None => {
                summary.push_str(&format!("info: {group_label}: no baseline yet\n"));
            }
        }
    }
    summary.push_str(&format!("\n{failures} regression failure(s)\n"));
    CommandOutcome {
        exit_status: if failures > 0 { EXIT_BENCH_FAILURE } else { EXIT_OK },
        summary,
        artifacts: Vec::new(),
    }
}

pub fn cmd_schema(out: Option<&Path>) -> CommandOutcome {
    let doc = schema_reference();
    match out {
        Some(path) => match fs::write(path, &doc) {
            Ok(()) => CommandOutcome {
                exit_status: EXIT_OK,
                summary: format!("schema written to {}", path.display()),
                artifacts: vec![path.to_path_buf()],
            },
            Err(e) => CommandOutcome::usage_error(format!("{}: {e}", path.display())),
        },
        None => CommandOutcome::ok(doc),
    }
}
