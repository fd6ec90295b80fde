mod cli;
mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::Parser;

use crate::cli::{Cli, Command};
use crate::config::RunConfig;
use crate::error::CliError;

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(CliError::config("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Check { run, theta } => commands::check(&RunConfig::resolve(&run, theta)?),
        Command::Region { run, rays, resolution } => {
            commands::region(&RunConfig::resolve(&run, None)?, rays, resolution)
        }
        Command::Ellipsoid { run } => {
            let write = run.out.is_some();
            commands::ellipsoid(&RunConfig::resolve(&run, None)?, write)
        }
        Command::Experiment { name, trials, seed, n, out } => commands::experiment(&name, trials, seed, n, out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
