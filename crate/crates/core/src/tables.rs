//! Energy-table import and export.
//!
//! CSV: header `index,energy`, one row per basis index in ascending order,
//! values written with 17 significant digits. Binary: `2^n` little-endian
//! `f64` values with no header.

use std::fmt::Write as _;
use std::path::Path;

use crate::basis;
use crate::error::{Error, Result};

/// Formats a float with 17 significant digits (exact round trip).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn table_to_csv(energies: &[f64]) -> String {
    let mut out = String::with_capacity(energies.len() * 28);
    out.push_str("index,energy\n");
    for (k, e) in energies.iter().enumerate() {
        let _ = writeln!(out, "{k},{}", fmt_f64(*e));
    }
    out
}

pub fn table_from_csv(text: &str) -> Result<Vec<f64>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next().map(str::trim) {
        Some("index,energy") => {}
        other => return Err(Error::Table(format!("unexpected header {other:?}"))),
    }
    let mut out = Vec::new();
    for (row, line) in lines.enumerate() {
        let (idx, val) = line
            .split_once(',')
            .ok_or_else(|| Error::Table(format!("row {row}: expected two columns")))?;
        let idx: usize = idx
            .trim()
            .parse()
            .map_err(|_| Error::Table(format!("row {row}: bad index {idx:?}")))?;
        if idx != row {
            return Err(Error::Table(format!("row {row}: index {idx} out of order")));
        }
        let val: f64 = val
            .trim()
            .parse()
            .map_err(|_| Error::Table(format!("row {row}: bad value {val:?}")))?;
        out.push(val);
    }
    basis::qubits_for_len(out.len())?;
    Ok(out)
}

pub fn table_to_bytes(energies: &[f64]) -> Vec<u8> {
    energies.iter().flat_map(|e| e.to_le_bytes()).collect()
}

pub fn table_from_bytes(bytes: &[u8]) -> Result<Vec<f64>> {
    if bytes.len() % 8 != 0 {
        return Err(Error::Table(format!("{} bytes is not a whole number of f64", bytes.len())));
    }
    let out: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    basis::qubits_for_len(out.len())?;
    Ok(out)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads a table, choosing the format from the extension (`.csv` or binary).
pub fn read_table(path: &Path) -> Result<Vec<f64>> {
    if path.extension().is_some_and(|e| e == "csv") {
        table_from_csv(&std::fs::read_to_string(path).map_err(io_err(path))?)
    } else {
        table_from_bytes(&std::fs::read(path).map_err(io_err(path))?)
    }
}

pub fn write_table(path: &Path, energies: &[f64]) -> Result<()> {
    let data = if path.extension().is_some_and(|e| e == "csv") {
        table_to_csv(energies).into_bytes()
    } else {
        table_to_bytes(energies)
    };
    std::fs::write(path, data).map_err(io_err(path))
}
