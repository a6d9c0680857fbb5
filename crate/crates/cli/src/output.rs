//! CSV traces and JSON sidecars.
//!
//! Floats in the CSV use Rust's shortest round-trip formatting in
//! exponent notation, so every value parses back to the same bits in any
//! locale. `wall_ms` is the only column that differs between identical runs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use bundle_accel::solvers::RunRecord;
use serde::{Deserialize, Serialize};

use crate::certify::CheckOutcome;
use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const CSV_HEADER: [&str; 7] = [
    "k",
    "f",
    "gap",
    "inner_iters",
    "epsilon",
    "oracle_calls",
    "wall_ms",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub k: usize,
    pub f: f64,
    pub gap: Option<f64>,
    pub inner_iters: usize,
    pub epsilon: Option<f64>,
    pub oracle_calls: usize,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    InnerBudgetExhausted { message: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub iterations_completed: usize,
    pub final_f: f64,
    pub final_gap: Option<f64>,
    /// Log-log slope of the gap over `k ∈ [100, 1000]`, when usable.
    pub slope_100_1000: Option<f64>,
    pub total_inner_iterations: usize,
    pub oracle_calls: usize,
    #[serde(default)]
    pub certificates: Vec<CheckOutcome>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub config: ExperimentConfig,
    pub status: RunStatus,
    /// File name of the CSV written alongside.
    pub csv: String,
    pub summary: Summary,
    pub record: RunRecord,
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

fn fmt_float(x: f64) -> String {
    format!("{x:e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

/// Writes `bytes` to a temporary file in the target directory, then renames
/// it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| CliError::io(format!("temp file in {}", dir.display()), e))?;
    tmp.write_all(bytes)
        .and_then(|_| tmp.flush())
        .map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
    tmp.persist(path)
        .map_err(|e| CliError::io(format!("renaming onto {}", path.display()), e.error))?;
    Ok(())
}

pub fn csv_bytes(run: &RunRecord) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for row in &run.iterations {
        w.write_record([
            row.k.to_string(),
            fmt_float(row.f),
            fmt_opt(row.gap),
            row.inner_iterations.to_string(),
            fmt_opt(row.epsilon),
            row.oracle_calls.to_string(),
            format!("{:.3}", row.wall_ms),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn write_csv(path: &Path, run: &RunRecord) -> Result<(), CliError> {
    write_atomic(path, &csv_bytes(run))
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>, CliError> {
    let malformed = |message: String| CliError::Malformed {
        path: path.display().to_string(),
        message,
    };
    let mut r = csv::Reader::from_path(path).map_err(|e| malformed(e.to_string()))?;
    let header = r.headers().map_err(|e| malformed(e.to_string()))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(malformed(format!("unexpected header {header:?}")));
    }
    r.deserialize()
        .collect::<Result<Vec<CsvRow>, _>>()
        .map_err(|e| malformed(e.to_string()))
}

pub fn write_sidecar(path: &Path, sidecar: &Sidecar) -> Result<(), CliError> {
    let json = serde_json::to_vec_pretty(sidecar).map_err(|e| CliError::Malformed {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    write_atomic(path, &json)
}

pub fn read_sidecar(path: &Path) -> Result<Sidecar, CliError> {
    let text =
        fs::read(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    serde_json::from_slice(&text).map_err(|e| CliError::Malformed {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Differences between a CSV trace and the record it was written from.
/// `wall_ms` is compared at the printed precision.
pub fn csv_mismatches(rows: &[CsvRow], run: &RunRecord) -> Vec<String> {
    let mut out = Vec::new();
    if rows.len() != run.iterations.len() {
        out.push(format!(
            "CSV has {} rows, record has {}",
            rows.len(),
            run.iterations.len()
        ));
    }
    let same = |a: f64, b: f64| a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan());
    let same_opt = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(a), Some(b)) => same(a, b),
        (None, None) => true,
        _ => false,
    };
    for (row, rec) in rows.iter().zip(&run.iterations) {
        let ok = row.k == rec.k
            && same(row.f, rec.f)
            && same_opt(row.gap, rec.gap)
            && row.inner_iters == rec.inner_iterations
            && same_opt(row.epsilon, rec.epsilon)
            && row.oracle_calls == rec.oracle_calls
            && (row.wall_ms - rec.wall_ms).abs() <= 5e-4 + 1e-12 * rec.wall_ms;
        if !ok {
            out.push(format!("row k={} differs from the record", rec.k));
        }
    }
    out
}
