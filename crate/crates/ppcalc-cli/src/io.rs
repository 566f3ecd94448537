//! Report and data-file plumbing: JSON reports with the timestamp kept in
//! a separate field, CSV plot data, and the input readers.

use crate::CliError;
use ppcalc::ntr::{SurvivalDataset, SurvivalRecord};
use serde::Serialize;
use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};

/// A machine-readable run report. Everything except `timestamp` is a pure
/// function of the inputs and seed, so reruns are byte-identical once the
/// timestamp field is excluded.
#[derive(Serialize)]
pub struct Report {
    pub schema: u32,
    pub module_version: String,
    pub command: String,
    pub seed: u64,
    pub inputs: Value,
    pub results: Value,
    pub timestamp: u64,
}

impl Report {
    pub fn new(command: &str, seed: u64, inputs: Value, results: Value) -> Self {
        Report {
            schema: 1,
            module_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            inputs,
            results,
            timestamp: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }
}

pub fn write_report(out_dir: &str, report: &Report) -> Result<PathBuf, CliError> {
    fs::create_dir_all(out_dir).map_err(CliError::Io)?;
    let path = Path::new(out_dir).join(format!("{}_report.json", report.command));
    let body = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::Config(format!("report serialization: {e}")))?;
    fs::write(&path, body).map_err(CliError::Io)?;
    Ok(path)
}

pub fn write_csv(
    out_dir: &str,
    name: &str,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<PathBuf, CliError> {
    fs::create_dir_all(out_dir).map_err(CliError::Io)?;
    let path = Path::new(out_dir).join(name);
    let mut w = csv::Writer::from_path(&path).map_err(csv_io)?;
    w.write_record(header).map_err(csv_io)?;
    for row in rows {
        w.write_record(row).map_err(csv_io)?;
    }
    w.flush().map_err(CliError::Io)?;
    Ok(path)
}

fn csv_io(e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::Io(io),
        other => CliError::Config(format!("csv: {other:?}")),
    }
}

/// Events CSV: one `time` column.
pub fn read_events(path: &str) -> Result<Vec<f64>, CliError> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_io)?;
    let headers = rdr.headers().map_err(csv_io)?.clone();
    let time_idx = headers
        .iter()
        .position(|h| h.trim() == "time")
        .ok_or_else(|| CliError::Config(format!("{path}: missing `time` column")))?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_io)?;
        let t: f64 = record
            .get(time_idx)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|e| CliError::Config(format!("{path}: bad time value: {e}")))?;
        out.push(t);
    }
    if out.is_empty() {
        return Err(CliError::Config(format!("{path}: no event rows")));
    }
    Ok(out)
}

/// Survival CSV: `time,event[,mark]` with event in {0, 1}.
pub fn read_survival(path: &str) -> Result<SurvivalDataset, CliError> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_io)?;
    let headers = rdr.headers().map_err(csv_io)?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let time_idx = col("time")
        .ok_or_else(|| CliError::Config(format!("{path}: missing `time` column")))?;
    let event_idx = col("event")
        .ok_or_else(|| CliError::Config(format!("{path}: missing `event` column")))?;
    let mark_idx = col("mark");
    let mut records = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_io)?;
        let time: f64 = record
            .get(time_idx)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|e| CliError::Config(format!("{path}: bad time value: {e}")))?;
        let event = match record.get(event_idx).unwrap_or("").trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(CliError::Config(format!(
                    "{path}: event must be 0 or 1, got `{other}`"
                )))
            }
        };
        let mark = match mark_idx.and_then(|i| record.get(i)) {
            Some(s) if !s.trim().is_empty() => Some(s.trim().parse().map_err(|e| {
                CliError::Config(format!("{path}: bad mark value: {e}"))
            })?),
            _ => None,
        };
        records.push(SurvivalRecord { time, event, mark });
    }
    SurvivalDataset::new(records).map_err(CliError::Compute)
}
