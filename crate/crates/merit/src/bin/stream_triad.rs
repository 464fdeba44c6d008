//! Memory-bandwidth triad kernel: a[i] = b[i] + s*c[i] over three arrays,
//! verified against the closed-form fill; prints achieved bytes/s.

use clap::Parser;

use merit::workloads::{run_triad_cli, TriadArgs};

fn main() {
    let args = TriadArgs::parse();
    let mut stdout = std::io::stdout();
    if let Err(e) = run_triad_cli(&args, &mut stdout) {
        eprintln!("stream-triad: {e}");
        std::process::exit(1);
    }
}
