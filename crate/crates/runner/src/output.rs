//! CSV time series, field snapshots and failure dumps.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chsav::{DiagnosticsRecord, Error as SchemeError, Field};

use crate::error::RunError;

/// Environment variable that relocates every relative output path.
pub const OUTPUT_DIR_ENV: &str = "CHSAV_OUTPUT_DIR";

/// `path` below `root` when it is relative and a root is given.
pub fn resolve(path: &Path, root: Option<&Path>) -> PathBuf {
    match root {
        Some(r) if path.is_relative() => r.join(path),
        _ => path.to_path_buf(),
    }
}

fn create_parent(path: &Path) -> Result<(), RunError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| RunError::Io(format!("{}: {e}", dir.display())))?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, RunError> {
    create_parent(path)?;
    let f = File::create(path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

pub struct CsvWriter {
    out: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(path: &Path) -> Result<Self, RunError> {
        let mut out = create(path)?;
        writeln!(out, "{}", DiagnosticsRecord::CSV_HEADER)?;
        Ok(Self { out })
    }

    pub fn write(&mut self, record: &DiagnosticsRecord) -> Result<(), RunError> {
        writeln!(self.out, "{}", record.csv_row())?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<(), RunError> {
        self.out.flush()?;
        Ok(())
    }
}

/// `# nx ny dx dy t` header, then one line of space-separated values per
/// grid row (row-major, y outer).
pub fn write_snapshot(path: &Path, field: &Field, t: f64) -> Result<(), RunError> {
    let mut out = create(path)?;
    let g = field.grid();
    writeln!(out, "# nx={} ny={} dx={:.16e} dy={:.16e} t={:.16e}", g.nx(), g.ny(), g.dx(), g.dy(), t)?;
    for j in 0..g.ny() {
        let row: Vec<String> = field.row(j).iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    out.flush()?;
    Ok(())
}

/// The text header line followed by the values as raw little-endian f64.
pub fn write_snapshot_binary(path: &Path, field: &Field, t: f64) -> Result<(), RunError> {
    let mut out = create(path)?;
    let g = field.grid();
    writeln!(out, "# nx={} ny={} dx={:.16e} dy={:.16e} t={:.16e}", g.nx(), g.ny(), g.dx(), g.dy(), t)?;
    for v in field.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `<stem>.failure.txt` with the error context and
/// `<stem>.failure.field` with the last accepted state.
pub fn write_failure_dump(csv_path: &Path, field: &Field, xi: f64, step: usize, t: f64, error: &SchemeError) -> Result<PathBuf, RunError> {
    let report = csv_path.with_extension("failure.txt");
    let mut out = create(&report)?;
    writeln!(out, "error: {error}")?;
    writeln!(out, "step: {step}")?;
    writeln!(out, "t: {t:.16e}")?;
    writeln!(out, "xi: {xi:.16e}")?;
    if let Some(sweep) = error.sweep() {
        writeln!(out, "sweep: {sweep}")?;
    }
    match error.root() {
        SchemeError::NoConvergence { stats, phi, xi } => {
            writeln!(out, "iterations: {}", stats.iterations)?;
            writeln!(out, "initial_residual: {:.6e}", stats.initial_residual)?;
            writeln!(out, "final_residual: {:.6e}", stats.final_residual)?;
            writeln!(out, "halvings: {}", stats.halvings_total)?;
            writeln!(out, "best_xi: {xi:.16e}")?;
            let line: Vec<String> = phi.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(out, "best_line: {}", line.join(" "))?;
        }
        SchemeError::CertificateViolation { which, magnitude } => {
            writeln!(out, "certificate: {which}")?;
            writeln!(out, "magnitude: {magnitude:.6e}")?;
        }
        _ => {}
    }
    out.flush()?;
    write_snapshot(&csv_path.with_extension("failure.field"), field, t)?;
    Ok(report)
}
