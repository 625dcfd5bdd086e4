//! CSV tables at 17 significant digits and JSON metadata sidecars.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::bath::BathSpec;
use crate::error::{Error, Result};
use crate::greens::FreqUnits;
use crate::model::BosonModel;
use crate::observables::SweepResult;

/// Parameters and provenance of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub command: String,
    pub code_version: String,
    pub timestamp_unix: u64,
    pub model: BosonModel,
    pub bath: BathSpec,
    pub gamma0: Option<f64>,
    pub units: FreqUnits,
    #[serde(default)]
    pub extra: serde_json::Value,
}

impl RunMetadata {
    pub fn new(command: &str, model: &BosonModel, bath: &BathSpec) -> Self {
        let timestamp_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            command: command.to_string(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp_unix,
            model: *model,
            bath: *bath,
            gamma0: None,
            units: FreqUnits::Scaled,
            extra: serde_json::Value::Null,
        }
    }
}

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

/// 17 significant digits; round-trips every finite f64.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn io_error(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

/// Writes a CSV table with a header row.
pub fn write_csv<W: Write>(out: W, header: &[&str], rows: impl IntoIterator<Item = Vec<Cell>>) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(header).map_err(io_error)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(io_error(format!("row has {} cells, header has {}", row.len(), header.len())));
        }
        let fields: Vec<String> = row
            .into_iter()
            .map(|c| match c {
                Cell::Num(x) => format_number(x),
                Cell::Int(i) => i.to_string(),
                Cell::Text(s) => s,
            })
            .collect();
        writer.write_record(&fields).map_err(io_error)?;
    }
    writer.flush().map_err(io_error)?;
    Ok(())
}

pub fn write_csv_file(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<Cell>>) -> Result<()> {
    let file = File::create(path).map_err(|e| io_error(format!("{}: {e}", path.display())))?;
    write_csv(BufWriter::new(file), header, rows)
}

pub fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| io_error(format!("{}: {e}", path.display())))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, value).map_err(io_error)?;
    out.write_all(b"\n").map_err(io_error)?;
    out.flush().map_err(io_error)
}

pub const SWEEP_HEADER: [&str; 4] = ["gamma_over_gamma0", "omega_tilde", "A", "iGK"];

/// One record per (γ, ω) grid point.
pub fn sweep_rows(sweep: &SweepResult) -> Vec<Vec<Cell>> {
    let n = sweep.omega.len();
    let mut rows = Vec::with_capacity(sweep.spectral.len());
    for (i, &r) in sweep.gamma_ratio.iter().enumerate() {
        for (j, &w) in sweep.omega.values().iter().enumerate() {
            rows.push(vec![
                Cell::Num(r),
                Cell::Num(w),
                Cell::Num(sweep.spectral[i * n + j]),
                Cell::Num(sweep.correlator[i * n + j]),
            ]);
        }
    }
    rows
}
