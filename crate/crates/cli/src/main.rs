mod commands;
mod config;
mod error;
mod output;
mod verify;

use std::process::ExitCode;

use clap::Parser;

use crate::config::{Cli, Command, RunConfig, PRECISION_ENV};
use crate::error::CliError;
use crate::output::write_atomic;

fn run(cfg: &RunConfig) -> Result<(), CliError> {
    log::info!("running {} at {} digits", cfg.command.name(), cfg.precision);
    if let Command::Verify { suite } = cfg.command {
        let (artifact, reports) = verify::run(suite, cfg.seed)?;
        write_atomic(cfg.output.as_deref(), &artifact.render(cfg.format))?;
        let failed: Vec<String> = reports
            .iter()
            .filter(|r| !r.violations.is_empty())
            .map(|r| format!("{} ({} of {})", r.name, r.violations.len(), r.checks))
            .collect();
        if !failed.is_empty() {
            return Err(CliError::Invariant(format!(
                "suites failed: {}",
                failed.join(", ")
            )));
        }
        return Ok(());
    }
    let artifact = commands::run_table(cfg)?;
    write_atomic(cfg.output.as_deref(), &artifact.render(cfg.format))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = config::resolve(cli, std::env::var(PRECISION_ENV).ok()).and_then(|cfg| run(&cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("momentbound: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
