//! Diagnostics CSV: one header row, one row per recorded level.
//!
//! Columns are the diagnostics record followed by constant lifting columns
//! (layer width, norms of the lifting fields, the three smallness margins
//! and the grid's measured Poincare constant). Numbers carry 17 significant
//! digits.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ddc_core::diagnostics::DiagnosticsRecord;
use ddc_core::Lifting;

use crate::error::{CliError, CliResult};

pub const LIFTING_COLUMNS: &[&str] = &[
    "lift_epsilon",
    "lift_omega_l2",
    "lift_tq_l2",
    "lift_sq_l2",
    "margin_omega",
    "margin_temp",
    "margin_salt",
    "c0_measured",
];

pub fn header() -> String {
    DiagnosticsRecord::COLUMNS
        .iter()
        .chain(LIFTING_COLUMNS)
        .copied()
        .collect::<Vec<_>>()
        .join(",")
}

pub fn lifting_values(lift: &Lifting, c0_measured: f64) -> [f64; 8] {
    [
        lift.epsilon,
        lift.norms.omega_l2,
        lift.norms.tq_l2,
        lift.norms.sq_l2,
        lift.margins.omega,
        lift.margins.temp,
        lift.margins.salt,
        c0_measured,
    ]
}

pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn row(rec: &DiagnosticsRecord, lift: &[f64; 8]) -> String {
    rec.values()
        .iter()
        .chain(lift.iter())
        .map(|&v| format_number(v))
        .collect::<Vec<_>>()
        .join(",")
}

/// Streams rows to a file.
pub struct CsvWriter {
    out: BufWriter<File>,
    lift: [f64; 8],
    path: std::path::PathBuf,
}

impl CsvWriter {
    pub fn create(path: &Path, lift: &Lifting, c0_measured: f64) -> CliResult<Self> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut w = Self {
            out: BufWriter::new(file),
            lift: lifting_values(lift, c0_measured),
            path: path.to_path_buf(),
        };
        writeln!(w.out, "{}", header()).map_err(|e| CliError::io(path, e))?;
        Ok(w)
    }

    pub fn push(&mut self, rec: &DiagnosticsRecord) -> CliResult<()> {
        writeln!(self.out, "{}", row(rec, &self.lift)).map_err(|e| CliError::io(&self.path, e))
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.out.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

/// Reads the record columns back, by header name; extra columns are
/// ignored.
pub fn read_records(path: &Path) -> CliResult<Vec<DiagnosticsRecord>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let bad = |line: usize, msg: String| CliError::config(Some(line), format!("{}: {msg}", path.display()));
    let head = match lines.next() {
        Some(h) => h.map_err(|e| CliError::io(path, e))?,
        None => return Err(bad(1, "empty file".into())),
    };
    let names: Vec<&str> = head.split(',').map(str::trim).collect();
    let positions = DiagnosticsRecord::COLUMNS
        .iter()
        .map(|c| {
            names
                .iter()
                .position(|n| n == c)
                .ok_or_else(|| bad(1, format!("missing column {c}")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != names.len() {
            return Err(bad(i + 2, format!("{} cells, expected {}", cells.len(), names.len())));
        }
        let vals = positions
            .iter()
            .map(|&p| {
                cells[p]
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| bad(i + 2, format!("cannot parse '{}'", cells[p])))
            })
            .collect::<CliResult<Vec<f64>>>()?;
        out.push(DiagnosticsRecord::from_values(&vals)?);
    }
    Ok(out)
}
