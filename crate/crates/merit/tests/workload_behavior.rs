//! Wall-clock behavior of the runnable workloads: sleeper timing on the
//! local backend and loopback bandwidth stability.

use merit::workloads::{run_amdahl, run_bisection, run_triad_cli, AmdahlArgs, TriadArgs};
use merit_core::workload::BisectionConfig;

fn fom_value(text: &str, prefix: &str, suffix: &str) -> f64 {
    text.lines()
        .rev()
        .find_map(|l| l.strip_prefix(prefix)?.strip_suffix(suffix)?.parse().ok())
        .unwrap_or_else(|| panic!("no FOM in {text:?}"))
}

#[test]
fn sleeper_reported_time_tracks_the_model_within_jitter() {
    let args = AmdahlArgs {
        serial: 0.6,
        parallel: 1.6,
        noise: 0.0,
        seed: None,
    };
    let mut out = Vec::new();
    run_amdahl(&args, 4, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let reported = fom_value(&text, "FOM: time=", " s");
    // Modeled time is 1.0 s; allow scheduler jitter of 20 %. Sleep never
    // undershoots, so the lower bound is the model itself.
    assert!(reported >= 1.0, "sleep undershot: {reported}");
    assert!(reported <= 1.2, "sleep overshot jitter bound: {reported}");
}

#[test]
fn triad_cli_prints_verification_and_rate() {
    let args = TriadArgs {
        length: 50_000,
        repetitions: 4,
        scalar: 2.0,
    };
    let mut out = Vec::new();
    run_triad_cli(&args, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert!(text.contains("verification: pass"), "{text}");
    let rate = fom_value(&text, "FOM: rate=", " B/s");
    assert!(rate.is_finite() && rate > 0.0);
}

#[test]
fn doubling_repetitions_keeps_pair_bandwidth_stable() {
    let measure = |repetitions: u64| {
        let config = BisectionConfig {
            process_count: 2,
            message_bytes: 2 * 1024 * 1024,
            repetitions,
            bidirectional: true,
        };
        // Take the best of five trials to shed cold-start and scheduler
        // noise; throughput disturbances only ever slow a trial down.
        (0..5)
            .map(|_| {
                run_bisection(&config)
                    .unwrap()
                    .min_bandwidth_bytes_per_second
            })
            .fold(0.0f64, f64::max)
    };
    let _warmup = measure(2);
    let base = measure(4);
    let doubled = measure(8);
    let ratio = doubled / base;
    assert!(
        (0.5..=2.0).contains(&ratio),
        "bandwidth drifted by more than 50%: {base} vs {doubled}"
    );
}
