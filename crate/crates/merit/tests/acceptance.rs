//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line. Tolerances are pinned here and nowhere else.
//!
//! Run with `cargo test -p merit --test acceptance -- --nocapture`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use merit::cli::{cmd_ci_check, cmd_run, GlobalOpts, EXIT_BENCH_FAILURE, EXIT_OK};
use merit::store::{stored, Store};
use merit::workloads::run_bisection;
use merit_core::expand::Workpackage;
use merit_core::metrics::{normalize_fom, verify_scalar, Metric, MetricKind};
use merit_core::mix_seed;
use merit_core::procurement::{
    select_memory_variant, size_partition, statevector_memory, MemoryVariantTable,
    SizingConstraint, SystemModel, Variant,
};
use merit_core::run::{RunRecord, RunStatus};
use merit_core::scaling::{
    fit_amdahl, relative_series, ScalingMode, ScalingPoint, ScalingSeries,
};
use merit_core::spec::{FomKind, FomSpec, VariantDef};
use merit_core::workload::{pair_bisection, BisectionConfig};

fn verdict(name: &str, passed: bool, detail: &str) {
    println!(
        "acceptance {name}: {} {detail}",
        if passed { "PASS" } else { "FAIL" }
    );
    assert!(passed, "{name}: {detail}");
}

fn repo_path(relative: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(relative)
}

fn close_rel(actual: f64, expected: f64, rel: f64) -> bool {
    (actual - expected).abs() <= rel * expected.abs()
}

/// Deterministic pseudo-random stream for the property sweeps.
fn unit_stream(seed: u64) -> impl FnMut() -> f64 {
    let mut state = seed;
    move || {
        state = mix_seed(state, 0x9e37);
        (state >> 11) as f64 / (1u64 << 53) as f64
    }
}

#[test]
fn criterion_01_relative_strong_scaling_reproduction() {
    let started = Instant::now();
    let series = ScalingSeries::new(
        "arbor",
        ScalingMode::Strong,
        vec![
            ScalingPoint { nodes: 4, runtime_seconds: 663.0 },
            ScalingPoint { nodes: 8, runtime_seconds: 498.0 },
            ScalingPoint { nodes: 12, runtime_seconds: 332.0 },
            ScalingPoint { nodes: 16, runtime_seconds: 250.0 },
        ],
        1,
    )
    .unwrap();
    let relative = relative_series(&series);
    let expected = [(0.5, 1.3313), (1.0, 1.0), (1.5, 0.6667), (2.0, 0.5020)];
    let mut ok = relative.len() == expected.len();
    for ((nodes, runtime), (expected_nodes, expected_runtime)) in
        relative.iter().zip(expected)
    {
        ok &= *nodes == expected_nodes && close_rel(*runtime, expected_runtime, 1e-4);
    }
    let elapsed = started.elapsed();
    ok &= elapsed.as_secs_f64() < 1.0;
    verdict(
        "01 relative strong-scaling series",
        ok,
        &format!("points {relative:?} in {elapsed:?}"),
    );
}

#[test]
fn criterion_02_partition_sizing() {
    let started = Instant::now();
    let unconstrained = size_partition(50e15, 78.125e12, SizingConstraint::None).unwrap();
    let power_of_two = size_partition(50e15, 78.125e12, SizingConstraint::PowerOfTwo).unwrap();
    let ok = unconstrained == 640 && power_of_two == 512 && started.elapsed().as_secs_f64() < 1.0;
    verdict(
        "02 partition sizing",
        ok,
        &format!("unconstrained={unconstrained} power_of_two={power_of_two}"),
    );
}

#[test]
fn criterion_03_statevector_memory_model() {
    const TIB: u128 = 1 << 40;
    const PIB: u128 = 1 << 50;
    let cases = [
        (36, TIB),
        (41, 32 * TIB),
        (42, 64 * TIB),
        (45, PIB / 2),
    ];
    let mut ok = true;
    for (qubits, expected) in cases {
        ok &= statevector_memory(qubits).unwrap() == expected;
    }
    verdict("03 state-vector memory model", ok, "16*2^n bytes, bit-exact");
}

#[test]
fn criterion_04_memory_variants() {
    let device_bytes = 40_000_000_000u64;
    let budgets: Vec<f64> = ["tiny", "small", "medium", "large"]
        .iter()
        .map(|name| {
            VariantDef {
                name: name.to_string(),
                memory_fraction: None,
                tag_overrides: BTreeSet::new(),
            }
            .budget_bytes(device_bytes)
            .unwrap()
        })
        .collect();
    let budgets_ok = budgets == vec![10e9, 20e9, 30e9, 40e9];

    let table = MemoryVariantTable {
        reference_devices: 2560,
        workload_scale_factor: 20.0,
        footprint_bytes: BTreeMap::from([
            (Variant::Tiny, 10_000_000_000),
            (Variant::Small, 20_000_000_000),
            (Variant::Medium, 30_000_000_000),
            (Variant::Large, 40_000_000_000),
        ]),
    };
    let proposal = SystemModel {
        name: "worked-proposal".to_string(),
        nodes: 5000,
        node_peak_flops: 200e12,
        devices_per_node: 4,
        device_memory_bytes: 64_000_000_000,
        avg_power_watts: 1e6,
        capex_currency: 1e8,
        energy_price_per_kwh: 0.1,
        lifetime_hours: 1e4,
        availability: 1.0,
    };
    let selected = select_memory_variant(&table, &proposal, 5000).unwrap();
    let ok = budgets_ok && selected == Variant::Small;
    verdict(
        "04 memory variants",
        ok,
        &format!("budgets={budgets:?} selected={}", selected.as_str()),
    );
}

#[test]
fn criterion_05_rate_normalization() {
    let fom = FomSpec {
        pattern: "rate=(.+)".to_string(),
        unit: "tokens/s".to_string(),
        kind: FomKind::Rate,
        work_units: Some(2.0e7),
        lower_is_better: true,
    };
    let mut next_unit = unit_stream(5);
    let mut ok = true;
    for _ in 0..100 {
        let rate = 10f64.powf(next_unit() * 12.0 - 3.0); // 1e-3 .. 1e9
        let metric = Metric {
            name: "fom".to_string(),
            value: rate,
            unit: "tokens/s".to_string(),
            kind: MetricKind::Rate,
        };
        let seconds = normalize_fom(&metric, &fom).unwrap();
        ok &= close_rel(seconds, 2.0e7 / rate, 1e-12);
    }
    verdict("05 rate-to-time normalization", ok, "100 random rates, 1e-12 relative");
}

#[test]
fn criterion_06_end_to_end_harness() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let opts = GlobalOpts {
        definitions: repo_path("definitions"),
        platform: "simulated".to_string(),
        tags: vec![],
        store: None,
        output_dir: dir.path().to_path_buf(),
        seed: 0,
        max_parallel: 4,
    };
    let outcome = cmd_run(&opts, &["amdahl-sleeper".to_string()]);
    let run_ok = outcome.exit_status == EXIT_OK;

    let store = Store::open(opts.store_path()).unwrap();
    let mut points: Vec<ScalingPoint> = store
        .records()
        .iter()
        .filter_map(|r| {
            Some(ScalingPoint {
                nodes: r.record.workpackage.nodes,
                runtime_seconds: r.record.fom_seconds()?,
            })
        })
        .collect();
    points.sort_by_key(|p| p.nodes);
    let series = ScalingSeries::new("amdahl-sleeper", ScalingMode::Strong, points, 0).unwrap();
    let fit = fit_amdahl(&series).unwrap();
    let elapsed = started.elapsed();

    let ok = run_ok
        && close_rel(fit.serial_seconds, 10.0, 1e-9)
        && close_rel(fit.parallel_seconds, 80.0, 1e-9)
        && fit.residual < 1e-9
        && elapsed.as_secs_f64() < 5.0;
    verdict(
        "06 end-to-end harness",
        ok,
        &format!(
            "fit=({}, {}) residual={} in {elapsed:?}",
            fit.serial_seconds, fit.parallel_seconds, fit.residual
        ),
    );
}

#[test]
fn criterion_07_verification_tolerances() {
    let reference = 1.0;
    let observed = reference * (1.0 + 5e-9);
    let loose = verify_scalar(observed, reference, 1e-8);
    let tight = verify_scalar(observed, reference, 1e-10);
    let mut ok = loose.passed && !tight.passed;

    // Monotonicity: anything passing a tighter tolerance passes a looser
    // one, over 1000 random cases.
    let mut next_unit = unit_stream(7);
    for _ in 0..1000 {
        let reference = (next_unit() * 2.0 - 1.0) * 1e6;
        if reference == 0.0 {
            continue;
        }
        let observed = reference * (1.0 + (next_unit() * 2.0 - 1.0) * 1e-7);
        let tolerance_tight = next_unit() * 1e-7;
        let tolerance_loose = tolerance_tight + next_unit() * 1e-7;
        let tight = verify_scalar(observed, reference, tolerance_tight);
        let loose = verify_scalar(observed, reference, tolerance_loose);
        if tight.passed {
            ok &= loose.passed;
        }
    }
    verdict(
        "07 verification tolerances",
        ok,
        "5e-9 deviation: pass@1e-8, fail@1e-10; monotone over 1000 cases",
    );
}

fn plain_record(benchmark: &str, nodes: u64, fom_seconds: f64, passed: bool) -> RunRecord {
    RunRecord {
        workpackage: Workpackage {
            benchmark: benchmark.to_string(),
            assignment: BTreeMap::new(),
            tags: BTreeSet::new(),
            nodes,
            workdir: String::new(),
        },
        started_at: String::new(),
        finished_at: String::new(),
        wall_seconds: fom_seconds,
        status: if passed {
            RunStatus::Success
        } else {
            RunStatus::StepFailure
        },
        raw_output: vec![],
        metrics: BTreeMap::from([
            ("fom".to_string(), fom_seconds),
            ("fom_seconds".to_string(), fom_seconds),
        ]),
        verification: vec![],
    }
}

#[test]
fn criterion_08_continuous_benchmarking() {
    let dir = tempfile::tempdir().unwrap();
    let opts_for = |file: &str| GlobalOpts {
        definitions: repo_path("definitions"),
        platform: "simulated".to_string(),
        tags: vec![],
        store: Some(dir.path().join(file)),
        output_dir: dir.path().to_path_buf(),
        seed: 0,
        max_parallel: 1,
    };

    // History {100, 102, 98} then 106 at 5%: regression, exit 1.
    let opts = opts_for("regressed.ndjson");
    let mut store = Store::open(opts.store_path()).unwrap();
    for (i, t) in [100.0, 102.0, 98.0, 106.0].iter().enumerate() {
        store.append(stored(format!("r{i}"), plain_record("demo", 8, *t, true))).unwrap();
    }
    drop(store);
    let regressed = cmd_ci_check(&opts, 5, 0.05);
    let mut ok = regressed.exit_status == EXIT_BENCH_FAILURE;

    // 104 instead: within threshold, exit 0.
    let opts = opts_for("ok.ndjson");
    let mut store = Store::open(opts.store_path()).unwrap();
    for (i, t) in [100.0, 102.0, 98.0, 104.0].iter().enumerate() {
        store.append(stored(format!("r{i}"), plain_record("demo", 8, *t, true))).unwrap();
    }
    drop(store);
    ok &= cmd_ci_check(&opts, 5, 0.05).exit_status == EXIT_OK;

    // Property: injecting failed runs never changes a baseline.
    let mut next_unit = unit_stream(11);
    for case in 0..50 {
        let opts_clean = opts_for(&format!("clean{case}.ndjson"));
        let opts_noisy = opts_for(&format!("noisy{case}.ndjson"));
        let mut clean = Store::open(opts_clean.store_path()).unwrap();
        let mut noisy = Store::open(opts_noisy.store_path()).unwrap();
        let mut id = 0;
        for _ in 0..(2 + (next_unit() * 8.0) as usize) {
            let runtime = 50.0 + next_unit() * 100.0;
            clean.append(stored(format!("c{id}"), plain_record("p", 4, runtime, true))).unwrap();
            noisy.append(stored(format!("n{id}"), plain_record("p", 4, runtime, true))).unwrap();
            id += 1;
            if next_unit() > 0.5 {
                let bad = 1000.0 + next_unit() * 1000.0;
                noisy
                    .append(stored(format!("nf{id}"), plain_record("p", 4, bad, false)))
                    .unwrap();
            }
        }
        let window = 1 + (next_unit() * 6.0) as usize;
        let a = clean.compute_baseline("p", &BTreeSet::new(), 4, window).unwrap();
        let b = noisy.compute_baseline("p", &BTreeSet::new(), 4, window).unwrap();
        ok &= a.baseline_seconds == b.baseline_seconds;
    }

    // Property: a larger runtime never lowers severity (monotone), checked
    // through the store path.
    let opts = opts_for("monotone.ndjson");
    let mut store = Store::open(opts.store_path()).unwrap();
    for (i, t) in [100.0, 100.0, 100.0].iter().enumerate() {
        store.append(stored(format!("m{i}"), plain_record("demo", 8, *t, true))).unwrap();
    }
    let mut last_severity = None;
    for (i, runtime) in [95.0, 100.0, 104.0, 104.6, 105.2, 120.0].iter().enumerate() {
        let mut probe = Store::open(dir.path().join(format!("probe{i}.ndjson"))).unwrap();
        for (j, t) in [100.0, 100.0, 100.0].iter().enumerate() {
            probe.append(stored(format!("p{j}"), plain_record("demo", 8, *t, true))).unwrap();
        }
        probe.append(stored("new", plain_record("demo", 8, *runtime, true))).unwrap();
        let finding = probe.check_group("demo", &BTreeSet::new(), 8, 5, 0.05).unwrap();
        if let Some(last) = last_severity {
            ok &= finding.severity >= last;
        }
        last_severity = Some(finding.severity);
    }
    drop(store);

    verdict(
        "08 continuous benchmarking",
        ok,
        "106 fails, 104 passes; baselines ignore failures; severity monotone",
    );
}

#[test]
fn criterion_09_bisection_workload() {
    // Exhaustive pairing check for every even P up to 64.
    let mut ok = true;
    for process_count in (2..=64u64).step_by(2) {
        let pairs = pair_bisection(process_count).unwrap();
        let half = process_count / 2;
        let mut seen = BTreeSet::new();
        ok &= pairs.len() as u64 == half;
        for (a, b) in &pairs {
            ok &= *a < half && *b >= half && seen.insert(*a) && seen.insert(*b);
        }
        ok &= seen.len() as u64 == process_count;
    }

    // Loopback run: P=4, 1 MiB messages, under 10 s; the reported minimum
    // is the true minimum of the per-pair list.
    let started = Instant::now();
    let result = run_bisection(&BisectionConfig {
        process_count: 4,
        message_bytes: 1024 * 1024,
        repetitions: 4,
        bidirectional: true,
    })
    .unwrap();
    let elapsed = started.elapsed();
    let true_min = result
        .per_pair
        .iter()
        .map(|p| p.bandwidth_bytes_per_second)
        .fold(f64::INFINITY, f64::min);
    ok &= result.min_bandwidth_bytes_per_second == true_min;
    ok &= result.per_pair.len() == 2;
    ok &= elapsed.as_secs_f64() < 10.0;
    verdict(
        "09 bisection workload",
        ok,
        &format!(
            "perfect matching for even P<=64; min={} B/s in {elapsed:?}",
            result.min_bandwidth_bytes_per_second
        ),
    );
}

#[test]
fn criterion_10_determinism() {
    let run_once = |dir: &Path| -> Vec<u8> {
        let opts = GlobalOpts {
            definitions: repo_path("definitions"),
            platform: "simulated".to_string(),
            tags: vec![],
            store: None,
            output_dir: dir.to_path_buf(),
            seed: 20260809,
            max_parallel: 4,
        };
        let outcome = cmd_run(&opts, &["amdahl-sleeper".to_string()]);
        assert_eq!(outcome.exit_status, EXIT_OK, "{}", outcome.summary);
        let table = outcome
            .artifacts
            .iter()
            .find(|p| p.ends_with("result-table.txt"))
            .expect("result table artifact");
        std::fs::read(table).unwrap()
    };
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let table_a = run_once(dir_a.path());
    let table_b = run_once(dir_b.path());
    verdict(
        "10 determinism",
        table_a == table_b,
        &format!("{} table bytes identical across reruns", table_a.len()),
    );
}
