//! Execution backends: where rendered step commands actually run.
//!
//! `local` spawns subprocesses on the host; `simulated` evaluates the
//! bundled workload models analytically without spawning anything, which
//! makes "640-node" campaigns runnable at a desk and bit-reproducible given
//! a seed. External schedulers are an interface only.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use clap::Parser;

use merit_core::workload::AmdahlConfig;
use merit_core::{fnv1a, format_float, mix_seed};

use crate::workloads::{AmdahlArgs, BisectionArgs, TriadArgs};

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("failed to spawn `{command}`: {source}")]
    Spawn {
        command: String,
        source: std::io::Error,
    },
    #[error("backend `{0}` is declaration-only and cannot execute steps")]
    NotExecutable(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Capabilities {
    pub max_nodes: u64,
    pub simulated: bool,
}

/// One step submission.
#[derive(Debug, Clone)]
pub struct SubmitRequest<'a> {
    pub command: &'a str,
    pub nodes: u64,
    pub environment: &'a [(String, String)],
    pub workdir: &'a Path,
}

/// What came back: exit status, captured output, and wall seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct Submission {
    pub exit_status: i32,
    pub stdout: String,
    pub stderr: String,
    pub wall_seconds: f64,
}

impl Submission {
    fn ok(stdout: String, wall_seconds: f64) -> Self {
        Submission {
            exit_status: 0,
            stdout,
            stderr: String::new(),
            wall_seconds,
        }
    }

    fn failed(exit_status: i32, stderr: String) -> Self {
        Submission {
            exit_status,
            stdout: String::new(),
            stderr,
            wall_seconds: 0.0,
        }
    }
}

/// Behavioral contract all backends satisfy. `submit` is synchronous from
/// the caller's perspective and must be safe for concurrent calls.
pub trait Backend: Sync {
    fn capabilities(&self) -> Capabilities;
    fn submit(&self, request: &SubmitRequest<'_>) -> Result<Submission, BackendError>;
}

/// Runs commands as `sh -c` subprocesses in the step's working directory.
pub struct LocalBackend {
    path_prepend: Vec<PathBuf>,
}

impl LocalBackend {
    /// The directories holding this executable (and its parent, for test
    /// layouts) are prepended to `PATH` so the bundled workload binaries
    /// installed next to `merit` are found.
    pub fn new() -> Self {
        let mut path_prepend = Vec::new();
        if let Ok(exe) = std::env::current_exe() {
            if let Some(dir) = exe.parent() {
                path_prepend.push(dir.to_path_buf());
                if let Some(parent) = dir.parent() {
                    path_prepend.push(parent.to_path_buf());
                }
            }
        }
        LocalBackend { path_prepend }
    }

    fn path_value(&self) -> String {
        let mut parts: Vec<String> = self
            .path_prepend
            .iter()
            .map(|p| p.display().to_string())
            .collect();
        if let Ok(path) = std::env::var("PATH") {
            parts.push(path);
        }
        parts.join(":")
    }
}

impl Default for LocalBackend {
    fn default() -> Self {
        Self::new()
    }
}

impl Backend for LocalBackend {
    fn capabilities(&self) -> Capabilities {
        Capabilities {
            max_nodes: u64::MAX,
            simulated: false,
        }
    }

    fn submit(&self, request: &SubmitRequest<'_>) -> Result<Submission, BackendError> {
        let started = Instant::now();
        let output = Command::new("sh")
            .arg("-c")
            .arg(request.command)
            .current_dir(request.workdir)
            .envs(request.environment.iter().map(|(k, v)| (k, v)))
            .env("PATH", self.path_value())
            .output()
            .map_err(|source| BackendError::Spawn {
                command: request.command.to_string(),
                source,
            })?;
        Ok(Submission {
            exit_status: output.status.code().unwrap_or(-1),
            stdout: String::from_utf8_lossy(&output.stdout).into_owned(),
            stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
            wall_seconds: started.elapsed().as_secs_f64(),
        })
    }
}

/// Nominal transfer rates the simulated backend reports for the synthetic
/// workloads, bytes per second.
const SIMULATED_TRIAD_RATE: f64 = 2.0e10;
const SIMULATED_PAIR_RATE: f64 = 1.0e10;

/// Evaluates the bundled workload command lines analytically. Given the
/// same seed, command, and node count the output is byte-identical, whatever
/// the execution order.
pub struct SimulatedBackend {
    seed: u64,
}

impl SimulatedBackend {
    pub fn new(seed: u64) -> Self {
        SimulatedBackend { seed }
    }

    fn run_amdahl(&self, args: &AmdahlArgs, nodes: u64) -> Submission {
        let call_seed = mix_seed(self.seed, args.seed.unwrap_or(0) ^ fnv1a(b"amdahl"));
        let config = AmdahlConfig {
            serial_seconds: args.serial,
            parallel_seconds: args.parallel,
            noise_fraction: args.noise,
            seed: call_seed,
        };
        let t = config.model_time(nodes);
        Submission::ok(format!("FOM: time={} s\n", format_float(t)), t)
    }

    fn run_triad(&self, args: &TriadArgs) -> Submission {
        let bytes = 3.0 * 8.0 * args.length as f64 * args.repetitions as f64;
        let elapsed = bytes / SIMULATED_TRIAD_RATE;
        let stdout = format!(
            "stream-triad: length={} repetitions={} scalar={}\nverification: pass\nFOM: rate={} B/s\n",
            args.length,
            args.repetitions,
            format_float(args.scalar),
            format_float(SIMULATED_TRIAD_RATE),
        );
        Submission::ok(stdout, elapsed)
    }

    fn run_bisection(&self, args: &BisectionArgs, nodes: u64) -> Submission {
        let processes = args.processes.unwrap_or(2 * nodes.max(1));
        let Ok(pairs) = merit_core::workload::pair_bisection(processes) else {
            return Submission::failed(
                2,
                format!("process count must be even and positive, got {processes}\n"),
            );
        };
        let mut stdout = format!(
            "linktest-bisection: processes={processes} message_bytes={} repetitions={} bidirectional={}\n",
            args.message_bytes, args.repetitions, args.bidirectional,
        );
        for (a, b) in &pairs {
            stdout.push_str(&format!(
                "pair ({a},{b}): rate={} B/s\n",
                format_float(SIMULATED_PAIR_RATE)
            ));
        }
        stdout.push_str(&format!(
            "FOM: rate={} B/s\n",
            format_float(SIMULATED_PAIR_RATE)
        ));
        let bytes = 2.0 * args.message_bytes as f64 * args.repetitions as f64;
        Submission::ok(stdout, bytes / SIMULATED_PAIR_RATE)
    }
}

impl Backend for SimulatedBackend {
    fn capabilities(&self) -> Capabilities {
        Capabilities {
            max_nodes: u64::MAX,
            simulated: true,
        }
    }

    fn submit(&self, request: &SubmitRequest<'_>) -> Result<Submission, BackendError> {
        let tokens: Vec<&str> = request.command.split_whitespace().collect();
        let Some(&program) = tokens.first() else {
            return Ok(Submission::failed(2, "empty command\n".to_string()));
        };
        let program = program.rsplit('/').next().unwrap_or(program);

        let parse_failure = |err: clap::Error| {
            Submission::failed(2, format!("simulated backend: {err}"))
        };

        Ok(match program {
            "amdahl-sleeper" => match AmdahlArgs::try_parse_from(&tokens) {
                Ok(args) => self.run_amdahl(&args, request.nodes),
                Err(e) => parse_failure(e),
            },
            "stream-triad" => match TriadArgs::try_parse_from(&tokens) {
                Ok(args) => self.run_triad(&args),
                Err(e) => parse_failure(e),
            },
            "linktest-bisection" => match BisectionArgs::try_parse_from(&tokens) {
                Ok(args) => self.run_bisection(&args, request.nodes),
                Err(e) => parse_failure(e),
            },
            "echo" => Submission::ok(format!("{}\n", tokens[1..].join(" ")), 0.0),
            "true" => Submission::ok(String::new(), 0.0),
            "false" => Submission::failed(1, String::new()),
            "sleep" => {
                // Models the delay without sleeping.
                let seconds = tokens
                    .get(1)
                    .and_then(|t| t.parse::<f64>().ok())
                    .unwrap_or(0.0);
                Submission {
                    wall_seconds: seconds,
                    ..Submission::ok(String::new(), 0.0)
                }
            }
            other => Submission::failed(
                127,
                format!("simulated backend: unknown program `{other}`\n"),
            ),
        })
    }
}

/// Counts concurrent submissions; test instrumentation for the executor's
/// parallelism cap.
pub struct InstrumentedBackend<B> {
    inner: B,
    in_flight: std::sync::atomic::AtomicUsize,
    peak: std::sync::atomic::AtomicUsize,
    delay: std::time::Duration,
}

impl<B: Backend> InstrumentedBackend<B> {
    pub fn new(inner: B, delay: std::time::Duration) -> Self {
        InstrumentedBackend {
            inner,
            in_flight: Default::default(),
            peak: Default::default(),
            delay,
        }
    }

    pub fn peak_concurrency(&self) -> usize {
        self.peak.load(std::sync::atomic::Ordering::SeqCst)
    }
}

impl<B: Backend> Backend for InstrumentedBackend<B> {
    fn capabilities(&self) -> Capabilities {
        self.inner.capabilities()
    }

    fn submit(&self, request: &SubmitRequest<'_>) -> Result<Submission, BackendError> {
        use std::sync::atomic::Ordering::SeqCst;
        let now = self.in_flight.fetch_add(1, SeqCst) + 1;
        self.peak.fetch_max(now, SeqCst);
        std::thread::sleep(self.delay);
        let result = self.inner.submit(request);
        self.in_flight.fetch_sub(1, SeqCst);
        result
    }
}
