use clap::Parser;

use merit::cli::{dispatch, Cli};

fn main() {
    let cli = Cli::parse();
    let outcome = dispatch(&cli);
    if !outcome.summary.is_empty() {
        println!("{}", outcome.summary.trim_end());
    }
    for artifact in &outcome.artifacts {
        eprintln!("wrote {}", artifact.display());
    }
    std::process::exit(outcome.exit_status);
}
