//! Batch front end for the `lambda_asp` crate: parses flags and config files, runs
//! a subcommand over a parameter grid, and writes CSV or JSON output.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numeric failure (including a
//! failed internal check at any grid point), 3 I/O error.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

pub use config::{Cli, Command, RunConfig};
pub use error::CliError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Runs a resolved configuration.
pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    if let Some(threads) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("threads: {e}")))?;
    }
    if cfg.command == Command::PlotScript {
        let csv = cfg.csv.as_ref().expect("plot-script config carries a csv path");
        output::emit_script(cfg, &commands::plot_script(&csv.to_string_lossy()))?;
        return Ok(());
    }
    let report = commands::execute(cfg);
    output::emit(cfg, &report)?;
    match report.failures.first() {
        None => Ok(()),
        Some(first) => Err(CliError::Numeric(format!(
            "{} of {} grid points failed; first: {first}",
            report.failures.len(),
            cfg.grid.len()
        ))),
    }
}

/// Full command line to exit status. Help and version requests succeed.
pub fn main_with<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            return Err(CliError::Config(first.to_string()));
        }
    };
    run(&config::resolve(&cli)?)
}
