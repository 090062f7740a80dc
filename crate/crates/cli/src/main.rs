//! Command-line front end: spectra, eigenfunctions, regime classification,
//! weights, Doob diagnostics and the Monte Carlo estimators, emitted as
//! deterministic CSV or JSON.
//!
//! Exit codes: 0 success, 2 input/validation error, 3 numerical failure.
//! Every run echoes the fully resolved parameter set into the output
//! metadata, and identical invocations produce byte-identical output
//! (seeded counter-based Monte Carlo, fixed-shape reductions).

mod commands;
mod output;

use clap::Parser;
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = commands::Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {}", e.kind(), e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
