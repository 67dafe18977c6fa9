//! Writing reports: CSV tables, JSON envelopes, and their destinations.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::commands::Report;
use crate::config::{Format, RunConfig};
use crate::error::CliError;
use crate::TOOL_VERSION;

/// JSON document `{tool_version, subcommand, seed, config_echo, failures, results}`.
pub fn envelope(cfg: &RunConfig, results: &[Value], failures: &[String]) -> Value {
    json!({
        "tool_version": TOOL_VERSION,
        "subcommand": cfg.command.name(),
        "seed": cfg.seed,
        "config_echo": cfg.echo,
        "failures": failures,
        "results": results,
    })
}

/// The table as CSV bytes, header first.
pub fn csv_bytes(report: &Report) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(format!("csv encoding failed: {e}"));
    w.write_record(&report.header).map_err(io)?;
    for row in &report.rows {
        w.write_record(row).map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Io(format!("csv encoding failed: {e}")))
}

fn pretty(value: &Value) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("json values serialize");
    text.push('\n');
    text.into_bytes()
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))
}

fn write_stdout(bytes: &[u8]) -> Result<(), CliError> {
    std::io::stdout().lock().write_all(bytes).map_err(|e| CliError::Io(format!("cannot write to stdout: {e}")))
}

/// Writes a report and returns the files created (empty for stdout).
///
/// CSV into a directory gives `<name>.csv` plus `<name>.summary.json`. JSON gives
/// `<name>.json`. Without a directory the table or document goes to stdout and, for
/// CSV, the summary envelope goes to stderr as one line.
pub fn emit(cfg: &RunConfig, report: &Report) -> Result<Vec<PathBuf>, CliError> {
    let name = cfg.command.name();
    match (cfg.format, &cfg.out_dir) {
        (Format::Csv, Some(dir)) => {
            prepare_dir(dir)?;
            let table = dir.join(format!("{name}.csv"));
            let summary = dir.join(format!("{name}.summary.json"));
            write_file(&table, &csv_bytes(report)?)?;
            write_file(&summary, &pretty(&envelope(cfg, &report.summaries, &report.failures)))?;
            Ok(vec![table, summary])
        }
        (Format::Json, Some(dir)) => {
            prepare_dir(dir)?;
            let path = dir.join(format!("{name}.json"));
            write_file(&path, &pretty(&envelope(cfg, &report.details, &report.failures)))?;
            Ok(vec![path])
        }
        (Format::Csv, None) => {
            write_stdout(&csv_bytes(report)?)?;
            eprintln!("{}", envelope(cfg, &report.summaries, &report.failures));
            Ok(Vec::new())
        }
        (Format::Json, None) => {
            write_stdout(&pretty(&envelope(cfg, &report.details, &report.failures)))?;
            Ok(Vec::new())
        }
    }
}

/// Writes the plotting stub to `<dir>/plot.py` or stdout.
pub fn emit_script(cfg: &RunConfig, script: &str) -> Result<Vec<PathBuf>, CliError> {
    match &cfg.out_dir {
        Some(dir) => {
            prepare_dir(dir)?;
            let path = dir.join("plot.py");
            write_file(&path, script.as_bytes())?;
            Ok(vec![path])
        }
        None => write_stdout(script.as_bytes()).map(|_| Vec::new()),
    }
}
