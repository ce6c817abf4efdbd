//! File formats.
//!
//! - Gaussian JSON: `{"mean": [..], "cov": [[..], ..]}` with a row-major
//!   covariance. Numbers are written with the shortest representation that
//!   round-trips exactly, so write → read is bit-identical.
//! - Point-cloud / matrix CSV: one row per line, comma separated, no header
//!   unless requested.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::Gaussian;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianFile {
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

impl From<&Gaussian> for GaussianFile {
    fn from(g: &Gaussian) -> Self {
        Self { mean: g.mean().iter().copied().collect(), cov: matrix_rows(g.cov()) }
    }
}

impl GaussianFile {
    pub fn into_gaussian(self) -> Result<Gaussian> {
        let d = self.mean.len();
        if self.cov.len() != d {
            return Err(Error::Dimension(format!("mean has length {d} but covariance has {} rows", self.cov.len())));
        }
        if let Some((i, row)) = self.cov.iter().enumerate().find(|(_, r)| r.len() != d) {
            return Err(Error::Dimension(format!("covariance row {i} has {} entries, expected {d}", row.len())));
        }
        let cov = DMatrix::from_fn(d, d, |i, j| self.cov[i][j]);
        Gaussian::new(DVector::from_vec(self.mean), cov)
    }
}

pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn gaussian_to_json(g: &Gaussian) -> String {
    let mut s = serde_json::to_string(&GaussianFile::from(g)).expect("finite values serialize");
    s.push('\n');
    s
}

pub fn gaussian_from_json(text: &str, origin: &str) -> Result<Gaussian> {
    let file: GaussianFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_string(),
        line: e.line(),
        message: e.to_string(),
    })?;
    file.into_gaussian().map_err(|e| Error::Parse { path: origin.to_string(), line: 1, message: e.to_string() })
}

pub fn read_gaussian(path: &Path) -> Result<Gaussian> {
    let text = read_text(path)?;
    gaussian_from_json(&text, &path.display().to_string())
}

pub fn write_gaussian(path: &Path, g: &Gaussian) -> Result<()> {
    fs::write(path, gaussian_to_json(g)).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

/// Parses a rectangular numeric CSV into an `n × d` matrix.
pub fn matrix_from_csv(text: &str, has_header: bool, origin: &str) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            path: origin.to_string(),
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(Error::Parse {
                    path: origin.to_string(),
                    line,
                    message: format!("expected {w} fields, found {}", record.len()),
                })
            }
            _ => {}
        }
        for field in record.iter() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                path: origin.to_string(),
                line,
                message: format!("not a number: {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: origin.to_string(),
                    line,
                    message: format!("non-finite value {field:?}"),
                });
            }
            values.push(v);
        }
        rows += 1;
    }
    let cols = width.unwrap_or(0);
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

pub fn read_matrix_csv(path: &Path, has_header: bool) -> Result<DMatrix<f64>> {
    let text = read_text(path)?;
    matrix_from_csv(&text, has_header, &path.display().to_string())
}

/// Headerless, comma-separated, row-major.
pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    fs::write(path, matrix_to_csv(m)).map_err(|source| Error::Io { path: path.display().to_string(), source })
}
