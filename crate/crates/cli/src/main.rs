//! `demcl`: stage-by-stage and end-to-end pedestrian recognition runs.

mod commands;

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = commands::Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("demcl: error: {msg}");
            ExitCode::FAILURE
        }
    }
}
