//! CSV and JSON emission with stable formatting.
//!
//! Floats are rendered with nine significant digits in scientific
//! notation, column order is fixed, and rows are emitted sorted, so a
//! `(config, seed)` pair fixes every output byte.

use anyhow::{Context, Result};
use serde::Serialize;
use std::io::Write;
use std::path::Path;

use crate::report::SweepTable;

/// Nine significant digits, scientific notation.
pub fn fmt_sig9(v: f64) -> String {
    format!("{v:.8e}")
}

pub fn write_sweep_csv<W: Write>(table: &SweepTable, mut w: W) -> Result<()> {
    writeln!(w, "axis_value,algorithm,mean_rate,stderr,mean_tau,trials")?;
    for row in &table.rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_sig9(row.axis_value),
            row.algorithm,
            fmt_sig9(row.mean_rate),
            fmt_sig9(row.stderr),
            fmt_sig9(row.mean_tau),
            row.trials
        )?;
    }
    Ok(())
}

pub fn write_json<T: Serialize, W: Write>(value: &T, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

/// Render to a string (used by the golden-file regression tests).
pub fn sweep_csv_string(table: &SweepTable) -> Result<String> {
    let mut buf = Vec::new();
    write_sweep_csv(table, &mut buf)?;
    Ok(String::from_utf8(buf)?)
}

pub fn json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    write_json(value, &mut buf)?;
    Ok(String::from_utf8(buf)?)
}

/// Write an emission to a file, surfacing the path on failure.
pub fn emit_to_path(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}
