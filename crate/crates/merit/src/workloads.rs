//! Runnable synthetic workloads: the sleeper, the triad kernel, and the
//! loopback bisection ping-pong. Each has a standalone binary entry point
//! that prints a parseable FOM line, reads `BENCH_NODES`, and exits nonzero
//! on verification failure. The analytic models live in `merit-core` and
//! are shared with the simulated backend.

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::time::{Duration, Instant};

use clap::Parser;

use merit_core::workload::{
    pair_bisection, triad_fill, triad_kernel, triad_verify, AmdahlConfig, BisectionConfig,
    TriadConfig, WorkloadError, DEFAULT_MESSAGE_BYTES,
};
use merit_core::{format_float, mix_seed};

#[derive(Debug, thiserror::Error)]
pub enum WorkloadRunError {
    #[error(transparent)]
    Config(#[from] WorkloadError),
    #[error("pair ({0},{1}) transport failure: {2}")]
    Transport(u64, u64, std::io::Error),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("worker thread panicked")]
    WorkerPanic,
}

/// Node count exported to every step; defaults to 1 outside a harness run.
pub fn bench_nodes_from_env() -> u64 {
    std::env::var("BENCH_NODES")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|n| *n >= 1)
        .unwrap_or(1)
}

fn bench_seed_from_env() -> u64 {
    std::env::var("BENCH_SEED")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(0)
}

// ── amdahl-sleeper ──────────────────────────────────────────────────────

/// Sleeps for the modeled serial + parallel/N time and reports the measured
/// elapsed seconds as the FOM.
#[derive(Debug, Parser)]
#[command(name = "amdahl-sleeper", disable_help_flag = false)]
pub struct AmdahlArgs {
    /// Serial fraction of the modeled runtime, seconds.
    #[arg(long)]
    pub serial: f64,
    /// Perfectly parallel fraction at one node, seconds.
    #[arg(long)]
    pub parallel: f64,
    /// Multiplicative noise bound in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Noise seed; falls back to BENCH_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Runs the sleeper: sleeps the modeled time, prints `FOM: time=<t> s` with
/// the measured duration.
pub fn run_amdahl(args: &AmdahlArgs, nodes: u64, out: &mut impl Write) -> Result<(), WorkloadRunError> {
    let config = AmdahlConfig {
        serial_seconds: args.serial,
        parallel_seconds: args.parallel,
        noise_fraction: args.noise,
        seed: mix_seed(args.seed.unwrap_or_else(bench_seed_from_env), 0),
    };
    config.validate()?;
    let target = config.model_time(nodes);
    let started = Instant::now();
    std::thread::sleep(Duration::from_secs_f64(target));
    let elapsed = started.elapsed().as_secs_f64();
    let _ = writeln!(out, "FOM: time={} s", format_float(elapsed));
    Ok(())
}

// ── stream-triad ────────────────────────────────────────────────────────

#[derive(Debug, Parser)]
#[command(name = "stream-triad")]
pub struct TriadArgs {
    /// Elements per array; size for more than last-level cache when
    /// measuring bandwidth.
    #[arg(long)]
    pub length: u64,
    #[arg(long)]
    pub repetitions: u64,
    #[arg(long, default_value_t = 2.0)]
    pub scalar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriadResult {
    pub bandwidth_bytes_per_second: f64,
    pub elapsed_seconds: f64,
}

/// Runs `a[i] = b[i] + s*c[i]` over three arrays for the configured
/// repetitions and verifies the result against the closed-form fill.
pub fn run_triad(config: &TriadConfig, scalar: f64) -> Result<TriadResult, WorkloadRunError> {
    config.validate()?;
    let length = usize::try_from(config.array_length)
        .map_err(|_| WorkloadError::NonPositive("array_length"))?;
    let (b, c) = triad_fill(length);
    let mut a = vec![0.0f64; length];

    let started = Instant::now();
    for _ in 0..config.repetitions {
        triad_kernel(&mut a, &b, &c, scalar);
    }
    let elapsed = started.elapsed().as_secs_f64().max(1e-9);

    if !triad_verify(&a, scalar) {
        return Err(WorkloadRunError::Verification(
            "triad result differs from the closed form".to_string(),
        ));
    }
    Ok(TriadResult {
        bandwidth_bytes_per_second: config.bytes_moved() / elapsed,
        elapsed_seconds: elapsed,
    })
}

pub fn run_triad_cli(args: &TriadArgs, out: &mut impl Write) -> Result<(), WorkloadRunError> {
    let config = TriadConfig {
        array_length: args.length,
        repetitions: args.repetitions,
    };
    let _ = writeln!(
        out,
        "stream-triad: length={} repetitions={} scalar={}",
        args.length,
        args.repetitions,
        format_float(args.scalar)
    );
    let result = run_triad(&config, args.scalar)?;
    let _ = writeln!(out, "verification: pass");
    let _ = writeln!(
        out,
        "FOM: rate={} B/s",
        format_float(result.bandwidth_bytes_per_second)
    );
    Ok(())
}

// ── linktest-bisection ──────────────────────────────────────────────────

#[derive(Debug, Parser)]
#[command(name = "linktest-bisection")]
pub struct BisectionArgs {
    /// Endpoint count; must be even. Defaults to 2 * BENCH_NODES.
    #[arg(long)]
    pub processes: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_MESSAGE_BYTES)]
    pub message_bytes: u64,
    #[arg(long, default_value_t = 4)]
    pub repetitions: u64,
    /// Exchange in both directions simultaneously instead of bouncing.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub bidirectional: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairBandwidth {
    pub endpoints: (u64, u64),
    pub bytes_moved: f64,
    pub elapsed_seconds: f64,
    pub bandwidth_bytes_per_second: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BisectionResult {
    pub per_pair: Vec<PairBandwidth>,
    pub min_bandwidth_bytes_per_second: f64,
}

const IO_TIMEOUT: Duration = Duration::from_secs(30);

fn pump_pair(
    config: &BisectionConfig,
    initiator: TcpStream,
    acceptor: TcpStream,
) -> std::io::Result<f64> {
    for stream in [&initiator, &acceptor] {
        stream.set_read_timeout(Some(IO_TIMEOUT))?;
        stream.set_write_timeout(Some(IO_TIMEOUT))?;
        stream.set_nodelay(true)?;
    }
    let message = usize::try_from(config.message_bytes).expect("message fits usize");
    let repetitions = config.repetitions;
    let bidirectional = config.bidirectional;

    let endpoint = move |stream: TcpStream, starts: bool| -> std::io::Result<()> {
        let mut tx = vec![0u8; message];
        let mut rx = vec![0u8; message];
        tx.iter_mut().enumerate().for_each(|(i, b)| *b = i as u8);
        let mut reader = stream.try_clone()?;
        let mut writer = stream;
        if bidirectional {
            // Full duplex: a writer thread pushes while this thread drains.
            let producer = std::thread::spawn(move || -> std::io::Result<()> {
                for _ in 0..repetitions {
                    writer.write_all(&tx)?;
                }
                writer.flush()
            });
            for _ in 0..repetitions {
                reader.read_exact(&mut rx)?;
            }
            producer.join().map_err(|_| {
                std::io::Error::other("writer thread panicked")
            })??;
        } else {
            // Bounce: one message each way per repetition, in turn.
            for _ in 0..repetitions {
                if starts {
                    writer.write_all(&tx)?;
                    writer.flush()?;
                    reader.read_exact(&mut rx)?;
                } else {
                    reader.read_exact(&mut rx)?;
                    writer.write_all(&tx)?;
                    writer.flush()?;
                }
            }
        }
        Ok(())
    };

    let started = Instant::now();
    let far = std::thread::spawn(move || endpoint(acceptor, false));
    endpoint(initiator, true)?;
    far.join()
        .map_err(|_| std::io::Error::other("endpoint thread panicked"))??;
    Ok(started.elapsed().as_secs_f64().max(1e-9))
}

/// Exchanges messages between the two halves of a set of loopback endpoints,
/// all pairs in parallel, and reports per-pair bandwidth plus the minimum
/// bisection bandwidth.
pub fn run_bisection(config: &BisectionConfig) -> Result<BisectionResult, WorkloadRunError> {
    config.validate()?;
    let pairs = pair_bisection(config.process_count)?;

    let mut handles = Vec::with_capacity(pairs.len());
    for &(a, b) in &pairs {
        let config = *config;
        handles.push(std::thread::spawn(move || -> Result<PairBandwidth, WorkloadRunError> {
            let transport = |e: std::io::Error| WorkloadRunError::Transport(a, b, e);
            let listener = TcpListener::bind("127.0.0.1:0").map_err(transport)?;
            let addr = listener.local_addr().map_err(transport)?;
            let accept = std::thread::spawn(move || listener.accept().map(|(s, _)| s));
            let initiator = TcpStream::connect(addr).map_err(transport)?;
            let acceptor = accept
                .join()
                .map_err(|_| WorkloadRunError::WorkerPanic)?
                .map_err(transport)?;
            let elapsed = pump_pair(&config, initiator, acceptor).map_err(transport)?;
            let bytes = config.bytes_per_pair();
            Ok(PairBandwidth {
                endpoints: (a, b),
                bytes_moved: bytes,
                elapsed_seconds: elapsed,
                bandwidth_bytes_per_second: bytes / elapsed,
            })
        }));
    }

    let mut per_pair = Vec::with_capacity(handles.len());
    for handle in handles {
        per_pair.push(handle.join().map_err(|_| WorkloadRunError::WorkerPanic)??);
    }
    let min = per_pair
        .iter()
        .map(|p| p.bandwidth_bytes_per_second)
        .fold(f64::INFINITY, f64::min);
    Ok(BisectionResult {
        per_pair,
        min_bandwidth_bytes_per_second: min,
    })
}

pub fn run_bisection_cli(args: &BisectionArgs, out: &mut impl Write) -> Result<(), WorkloadRunError> {
    let config = BisectionConfig {
        process_count: args.processes.unwrap_or(2 * bench_nodes_from_env()),
        message_bytes: args.message_bytes,
        repetitions: args.repetitions,
        bidirectional: args.bidirectional,
    };
    let _ = writeln!(
        out,
        "linktest-bisection: processes={} message_bytes={} repetitions={} bidirectional={}",
        config.process_count, config.message_bytes, config.repetitions, config.bidirectional
    );
    let result = run_bisection(&config)?;
    for pair in &result.per_pair {
        let _ = writeln!(
            out,
            "pair ({},{}): rate={} B/s",
            pair.endpoints.0,
            pair.endpoints.1,
            format_float(pair.bandwidth_bytes_per_second)
        );
    }
    let _ = writeln!(
        out,
        "FOM: rate={} B/s",
        format_float(result.min_bandwidth_bytes_per_second)
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triad_reports_positive_finite_bandwidth() {
        let result = run_triad(
            &TriadConfig {
                array_length: 4096,
                repetitions: 3,
            },
            2.0,
        )
        .unwrap();
        assert!(result.bandwidth_bytes_per_second.is_finite());
        assert!(result.bandwidth_bytes_per_second > 0.0);
    }

    #[test]
    fn triad_rejects_zero_repetitions() {
        let err = run_triad(
            &TriadConfig {
                array_length: 8,
                repetitions: 0,
            },
            2.0,
        )
        .unwrap_err();
        assert!(matches!(err, WorkloadRunError::Config(_)));
    }

    #[test]
    fn bisection_single_pair_min_is_that_pair() {
        let config = BisectionConfig {
            process_count: 2,
            message_bytes: 64 * 1024,
            repetitions: 2,
            bidirectional: true,
        };
        let result = run_bisection(&config).unwrap();
        assert_eq!(result.per_pair.len(), 1);
        assert_eq!(
            result.min_bandwidth_bytes_per_second,
            result.per_pair[0].bandwidth_bytes_per_second
        );
    }

    #[test]
    fn bisection_min_bounds_every_pair() {
        let config = BisectionConfig {
            process_count: 8,
            message_bytes: 32 * 1024,
            repetitions: 2,
            bidirectional: false,
        };
        let result = run_bisection(&config).unwrap();
        assert_eq!(result.per_pair.len(), 4);
        for pair in &result.per_pair {
            assert!(result.min_bandwidth_bytes_per_second <= pair.bandwidth_bytes_per_second);
        }
    }

    #[test]
    fn bisection_cli_defaults_processes_from_nodes() {
        let args = BisectionArgs::try_parse_from([
            "linktest-bisection",
            "--message-bytes",
            "1024",
            "--repetitions",
            "1",
        ])
        .unwrap();
        assert_eq!(args.processes, None);
        assert_eq!(args.message_bytes, 1024);
        assert!(args.bidirectional);
    }

    #[test]
    fn amdahl_sleeper_reports_elapsed_time() {
        let args = AmdahlArgs {
            serial: 0.02,
            parallel: 0.08,
            noise: 0.0,
            seed: None,
        };
        let mut out = Vec::new();
        run_amdahl(&args, 4, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("FOM: time="), "{text}");
        let value: f64 = text
            .trim_start_matches("FOM: time=")
            .trim_end_matches(" s\n")
            .parse()
            .unwrap();
        // 0.02 + 0.08/4 = 0.04 modeled; sleep may only overshoot.
        assert!((0.04..0.5).contains(&value), "{value}");
    }
}
