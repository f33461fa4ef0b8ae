use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    match alpir_cli::run(alpir_cli::config::Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
