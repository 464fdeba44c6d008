//! Sleeper workload: models a serial + perfectly parallel runtime, sleeps
//! it, and prints the measured time as the FOM.

use clap::Parser;

use merit::workloads::{bench_nodes_from_env, run_amdahl, AmdahlArgs};

fn main() {
    let args = AmdahlArgs::parse();
    let nodes = bench_nodes_from_env();
    let mut stdout = std::io::stdout();
    if let Err(e) = run_amdahl(&args, nodes, &mut stdout) {
        eprintln!("amdahl-sleeper: {e}");
        std::process::exit(1);
    }
}
