mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;
use trotterforge::Error;

const EXIT_VALIDATION: u8 = 2;
const EXIT_CAPACITY: u8 = 3;
const EXIT_USAGE: u8 = 64;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_VALIDATION);
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                commands::CliError::Core(Error::Capacity(_)) => EXIT_CAPACITY,
                _ => EXIT_VALIDATION,
            })
        }
    }
}

/// Caps the rayon pool at `TROTTERFORGE_THREADS` when set.
fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("TROTTERFORGE_THREADS") else {
        return Ok(());
    };
    let threads: usize = value.trim().parse().map_err(|_| format!("TROTTERFORGE_THREADS={value:?} is not a count"))?;
    if threads == 0 {
        return Err("TROTTERFORGE_THREADS must be positive".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().map_err(|e| e.to_string())
}
