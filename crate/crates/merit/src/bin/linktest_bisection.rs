//! Loopback bisection ping-pong: pairs endpoints across two halves,
//! exchanges messages in parallel, and reports per-pair bandwidth plus the
//! minimum bisection bandwidth.

use clap::Parser;

use merit::workloads::{run_bisection_cli, BisectionArgs};

fn main() {
    let args = BisectionArgs::parse();
    let mut stdout = std::io::stdout();
    if let Err(e) = run_bisection_cli(&args, &mut stdout) {
        eprintln!("linktest-bisection: {e}");
        std::process::exit(1);
    }
}
