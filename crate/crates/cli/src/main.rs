//! `gfnn`: kernel export, training, evaluation, benchmarking and sweeps for
//! the fixed-filter network and its learned-filter baseline.
//!
//! Exit codes: 0 success, 1 usage, 2 output I/O, 3 missing data,
//! 4 corrupt artifact.

mod config;
mod run;

use std::process::ExitCode;

use clap::Parser;

use crate::config::Cli;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(hint) = e.hint() {
                eprintln!("{hint}");
            }
            ExitCode::from(e.code())
        }
    }
}
