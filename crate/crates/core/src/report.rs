//! CSV and JSON output for error tables and trajectories.
//!
//! Floats are written in Rust's shortest round-trip form, so identical runs
//! produce identical bytes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::{ErrorTable, PdeReport, TrajectoryRow, TRAJECTORY_COLUMNS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::InvalidParameter(format!("unknown output format {other}"))),
        }
    }
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn error_table_csv(table: &ErrorTable) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(table.columns())?;
    for row in &table.rows {
        let mut rec = vec![row.n.to_string()];
        rec.extend(row.values().into_iter().map(num));
        w.write_record(&rec)?;
    }
    finish(w)
}

pub fn trajectory_csv(rows: &[TrajectoryRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRAJECTORY_COLUMNS)?;
    for r in rows {
        let vals = [
            r.t,
            r.dist_steady_std,
            r.dist_steady_con,
            r.drift_m0_std,
            r.drift_m0_con,
            r.drift_m1_std,
            r.drift_m1_con,
            r.drift_m2_std,
            r.drift_m2_con,
        ];
        w.write_record(vals.iter().map(|&v| num(v)))?;
    }
    finish(w)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is ascii"))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut f = fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

/// Writes an approximation table to `path`.
pub fn write_error_table(table: &ErrorTable, path: &Path, format: Format) -> Result<()> {
    let body = match format {
        Format::Csv => error_table_csv(table)?,
        Format::Json => to_json(table)?,
    };
    write_file(path, &body)
}

/// Writes `accuracy.<ext>`, one `trajectory_N<n>.<ext>` per mode count and
/// `summary.json` into `dir`. Returns the paths written.
pub fn write_pde_report(report: &PdeReport, dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let ext = format.extension();
    let mut written = Vec::new();

    let acc = dir.join(format!("accuracy.{ext}"));
    write_error_table(&report.accuracy, &acc, format)?;
    written.push(acc);

    for tr in &report.trajectories {
        let path = dir.join(format!("trajectory_N{}.{ext}", tr.n));
        let body = match format {
            Format::Csv => trajectory_csv(&tr.rows)?,
            Format::Json => to_json(&tr.rows)?,
        };
        write_file(&path, &body)?;
        written.push(path);
    }

    let summary = dir.join("summary.json");
    write_file(&summary, &to_json(report)?)?;
    written.push(summary);
    Ok(written)
}
