//! File formats for stage handoff.
//!
//! Matrices go to CSV with a header row of column labels and a leading
//! column of row labels. Floats use Rust's shortest round-trip formatting,
//! so a write/read cycle is exact.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Serde adapter storing a matrix as a list of rows.
pub mod matrix_rows {
    use nalgebra::DMatrix;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().cloned().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        super::from_rows(&rows).map_err(D::Error::custom)
    }
}

/// Builds a matrix from equal-length rows; an empty list is `0 × 0`.
pub fn from_rows(rows: &[Vec<f64>]) -> std::result::Result<DMatrix<f64>, String> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err("ragged matrix rows".into());
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Numerical(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
}

/// Writes `m` with columns labelled `{col_prefix}{j}` and rows `{row_prefix}{i}`.
pub fn write_matrix_csv<T: std::fmt::Display + nalgebra::Scalar>(
    path: &Path,
    m: &DMatrix<T>,
    row_prefix: &str,
    col_prefix: &str,
) -> Result<()> {
    let cols: Vec<String> = (0..m.ncols()).map(|j| format!("{col_prefix}{j}")).collect();
    write_labelled_csv(path, m, row_prefix, &cols)
}

pub fn write_labelled_csv<T: std::fmt::Display + nalgebra::Scalar>(
    path: &Path,
    m: &DMatrix<T>,
    row_prefix: &str,
    col_labels: &[String],
) -> Result<()> {
    if col_labels.len() != m.ncols() {
        return Err(Error::Argument("one label per column required".into()));
    }
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header = vec![String::new()];
    header.extend(col_labels.iter().cloned());
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for i in 0..m.nrows() {
        let mut rec = vec![format!("{row_prefix}{i}")];
        rec.extend((0..m.ncols()).map(|j| m[(i, j)].to_string()));
        w.write_record(&rec).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::parse(path, format!("{other:?}")),
        }
    } else {
        Error::parse(path, e.to_string())
    }
}

/// Reads a matrix written by [`write_matrix_csv`], ignoring the labels.
pub fn read_matrix_csv<T>(path: &Path) -> Result<DMatrix<T>>
where
    T: FromStr + nalgebra::Scalar,
    T::Err: std::fmt::Display,
{
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let ncols = r.headers().map_err(|e| csv_error(path, e))?.len().saturating_sub(1);
    let mut values: Vec<T> = Vec::new();
    let mut nrows = 0;
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        if rec.len() != ncols + 1 {
            return Err(Error::parse(path, format!("row {i} has {} fields, expected {}", rec.len(), ncols + 1)));
        }
        for (j, field) in rec.iter().skip(1).enumerate() {
            let v = field
                .trim()
                .parse::<T>()
                .map_err(|e| Error::parse(path, format!("row {i}, column {j}: {e}")))?;
            values.push(v);
        }
        nrows += 1;
    }
    Ok(DMatrix::from_row_slice(nrows, ncols, &values))
}

pub fn write_mask_csv(path: &Path, mask: &DMatrix<bool>) -> Result<()> {
    write_matrix_csv(path, &mask.map(u8::from), "p", "m")
}

pub fn read_mask_csv(path: &Path) -> Result<DMatrix<bool>> {
    let raw: DMatrix<u8> = read_matrix_csv(path)?;
    if raw.iter().any(|&v| v > 1) {
        return Err(Error::parse(path, "mask entries must be 0 or 1"));
    }
    Ok(raw.map(|v| v == 1))
}
