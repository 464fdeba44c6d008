//! The campaign executor: runs each workpackage's steps in plan order via a
//! backend, captures output, extracts and verifies the figure of merit, and
//! assembles `RunRecord`s.
//!
//! Workpackages may run concurrently up to `max_parallel`; the steps of one
//! workpackage never interleave. A failing step aborts the rest of its
//! workpackage only, so a campaign surfaces all failures in one pass.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use chrono::{SecondsFormat, Utc};

use merit_core::expand::Workpackage;
use merit_core::metrics::{
    extract_metrics, normalize_fom, parse_reference_values, verify_presence, verify_scalar,
    VerificationOutcome,
};
use merit_core::plan::{ExecutionPlan, RenderedStep};
use merit_core::run::{RunRecord, RunStatus, StepOutput};
use merit_core::spec::{BenchmarkSpec, ReferenceValue, RuleKind, VerificationRule};
use merit_core::template::{render_template, TemplateError};

use crate::backend::{Backend, SubmitRequest};

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("working directory already exists: {}", .0.display())]
    WorkdirCollision(PathBuf),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("submission template: {0}")]
    SubmissionTemplate(TemplateError),
    #[error("step command: {0}")]
    StepTemplate(TemplateError),
    #[error("executor worker panicked")]
    WorkerPanic,
}

/// Campaign-level execution settings.
#[derive(Debug, Clone)]
pub struct ExecuteOptions {
    /// Root for all artifacts; step directories land under
    /// `<output_dir>/runs/<run_id>/`.
    pub output_dir: PathBuf,
    /// Fresh identifier per campaign; reruns never overwrite prior results.
    pub run_id: String,
    pub max_parallel: usize,
    /// Extra environment exported to every step (platform profile).
    pub environment: Vec<(String, String)>,
    /// Wrapper template with `${command}` and `${nodes}` available.
    pub submission_template: String,
    /// Base directory for verification reference files.
    pub definitions_dir: Option<PathBuf>,
    pub seed: u64,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EngineError + '_ {
    move |source| EngineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Executes every workpackage and returns one record per workpackage, in
/// workpackage order.
pub fn execute(
    spec: &BenchmarkSpec,
    plan: &ExecutionPlan,
    workpackages: &[Workpackage],
    backend: &dyn Backend,
    options: &ExecuteOptions,
) -> Result<Vec<RunRecord>, EngineError> {
    let results: Vec<Mutex<Option<Result<RunRecord, EngineError>>>> =
        workpackages.iter().map(|_| Mutex::new(None)).collect();
    let cursor = AtomicUsize::new(0);
    let workers = options.max_parallel.max(1).min(workpackages.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = cursor.fetch_add(1, Ordering::SeqCst);
                if index >= workpackages.len() {
                    break;
                }
                let outcome = run_workpackage(spec, plan, &workpackages[index], backend, options);
                *results[index].lock().expect("result slot poisoned") = Some(outcome);
            });
        }
    });

    results
        .into_iter()
        .map(|slot| {
            slot.into_inner()
                .expect("result slot poisoned")
                .unwrap_or(Err(EngineError::WorkerPanic))
        })
        .collect()
}

fn run_workpackage(
    spec: &BenchmarkSpec,
    plan: &ExecutionPlan,
    workpackage: &Workpackage,
    backend: &dyn Backend,
    options: &ExecuteOptions,
) -> Result<RunRecord, EngineError> {
    let relative_workdir = format!("runs/{}/{}", options.run_id, workpackage.workdir);
    let workdir = options.output_dir.join(&relative_workdir);
    if workdir.exists() {
        return Err(EngineError::WorkdirCollision(workdir));
    }
    fs::create_dir_all(&workdir).map_err(io_err(&workdir))?;

    let rendered = plan
        .render(&workpackage.assignment)
        .map_err(EngineError::StepTemplate)?;

    let mut environment = vec![
        ("BENCH_NODES".to_string(), workpackage.nodes.to_string()),
        ("BENCH_SEED".to_string(), options.seed.to_string()),
    ];
    environment.extend(options.environment.iter().cloned());

    let started_at = Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true);
    let mut outputs: Vec<StepOutput> = Vec::with_capacity(rendered.len());
    let mut wall_seconds = 0.0;
    let mut step_failed = false;

    for step in &rendered {
        let output = run_step(step, workpackage, &workdir, &environment, backend, options)?;
        wall_seconds += output.wall_seconds;
        let failed = output.exit_status != 0;
        outputs.push(output);
        if failed {
            step_failed = true;
            break;
        }
    }

    let mut metrics = BTreeMap::new();
    let mut verification = Vec::new();
    if !step_failed {
        let stdout_all: String = outputs.iter().map(|o| o.stdout.as_str()).collect();
        match extract_metrics(&stdout_all, &spec.fom) {
            Ok(metric) => {
                metrics.insert("fom".to_string(), metric.value);
                match normalize_fom(&metric, &spec.fom) {
                    Ok(seconds) => {
                        metrics.insert("fom_seconds".to_string(), seconds);
                    }
                    Err(e) => verification.push(VerificationOutcome {
                        rule: "fom".to_string(),
                        observed: Some(metric.value),
                        passed: false,
                        detail: format!("normalization failed: {e}"),
                    }),
                }
            }
            Err(e) => verification.push(VerificationOutcome {
                rule: "fom".to_string(),
                observed: None,
                passed: false,
                detail: format!("extraction failed: {e}"),
            }),
        }
        for rule in &spec.verification {
            verification.push(apply_rule(rule, &metrics, &stdout_all, options));
        }
    }

    let status = if step_failed {
        RunStatus::StepFailure
    } else if verification.iter().any(|v| !v.passed) {
        RunStatus::VerificationFailure
    } else {
        RunStatus::Success
    };

    let mut workpackage = workpackage.clone();
    workpackage.workdir = relative_workdir;
    Ok(RunRecord {
        workpackage,
        started_at,
        finished_at: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
        wall_seconds,
        status,
        raw_output: outputs,
        metrics,
        verification,
    })
}

fn run_step(
    step: &RenderedStep,
    workpackage: &Workpackage,
    workdir: &Path,
    environment: &[(String, String)],
    backend: &dyn Backend,
    options: &ExecuteOptions,
) -> Result<StepOutput, EngineError> {
    let step_dir = workdir.join(&step.name);
    fs::create_dir_all(&step_dir).map_err(io_err(&step_dir))?;

    let submission_assignment = BTreeMap::from([
        ("command".to_string(), step.command.clone()),
        ("nodes".to_string(), workpackage.nodes.to_string()),
    ]);
    let command = render_template(&options.submission_template, &submission_assignment)
        .map_err(EngineError::SubmissionTemplate)?;

    let mut stdout = String::new();
    let mut stderr = String::new();
    let mut exit_status = 0;
    let mut wall_seconds = 0.0;
    for _ in 0..step.iterations.max(1) {
        let request = SubmitRequest {
            command: &command,
            nodes: workpackage.nodes,
            environment,
            workdir: &step_dir,
        };
        // Submission failures are step failures, not campaign aborts.
        let submission = match backend.submit(&request) {
            Ok(s) => s,
            Err(e) => crate::backend::Submission {
                exit_status: 127,
                stdout: String::new(),
                stderr: format!("{e}\n"),
                wall_seconds: 0.0,
            },
        };
        stdout.push_str(&submission.stdout);
        stderr.push_str(&submission.stderr);
        wall_seconds += submission.wall_seconds;
        exit_status = submission.exit_status;
        if exit_status != 0 {
            break;
        }
    }

    fs::write(step_dir.join("stdout.txt"), &stdout).map_err(io_err(&step_dir))?;
    fs::write(step_dir.join("stderr.txt"), &stderr).map_err(io_err(&step_dir))?;
    fs::write(step_dir.join("rc.txt"), format!("{exit_status}\n")).map_err(io_err(&step_dir))?;

    Ok(StepOutput {
        step: step.name.clone(),
        exit_status,
        stdout,
        stderr,
        wall_seconds,
    })
}

fn apply_rule(
    rule: &VerificationRule,
    metrics: &BTreeMap<String, f64>,
    stdout: &str,
    options: &ExecuteOptions,
) -> VerificationOutcome {
    let label = rule.label();
    match rule.kind {
        RuleKind::KeyPresence => {
            let mut outcome = verify_presence(stdout, &[rule.target.as_str()]);
            outcome.rule = label;
            outcome
        }
        RuleKind::ScalarTolerance | RuleKind::ExactMatch => {
            let Some(observed) = metrics.get(&rule.target).copied() else {
                return VerificationOutcome {
                    rule: label,
                    observed: None,
                    passed: false,
                    detail: format!("metric `{}` was not extracted", rule.target),
                };
            };
            let reference = match resolve_reference(rule, options) {
                Ok(value) => value,
                Err(detail) => {
                    return VerificationOutcome {
                        rule: label,
                        observed: Some(observed),
                        passed: false,
                        detail,
                    }
                }
            };
            let tolerance = match rule.kind {
                RuleKind::ScalarTolerance => rule.rel_tolerance.unwrap_or(0.0),
                _ => 0.0,
            };
            let mut outcome = verify_scalar(observed, reference, tolerance);
            outcome.rule = label;
            outcome
        }
    }
}

/// Inline numbers pass through; file references resolve relative to the
/// definitions directory and use the file's first value.
fn resolve_reference(rule: &VerificationRule, options: &ExecuteOptions) -> Result<f64, String> {
    match &rule.reference {
        Some(ReferenceValue::Number(value)) => Ok(*value),
        Some(ReferenceValue::File(path)) => {
            let resolved = match &options.definitions_dir {
                Some(dir) if !Path::new(path).is_absolute() => dir.join(path),
                _ => PathBuf::from(path),
            };
            let text = fs::read_to_string(&resolved)
                .map_err(|e| format!("reference file {}: {e}", resolved.display()))?;
            let values = parse_reference_values(&text)
                .map_err(|e| format!("reference file {}: {e}", resolved.display()))?;
            values
                .first()
                .copied()
                .ok_or_else(|| format!("reference file {} is empty", resolved.display()))
        }
        None => Err("rule has no reference value".to_string()),
    }
}
