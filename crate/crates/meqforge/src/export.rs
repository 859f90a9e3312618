//! File writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use meqforge_core::{c64, Mat};
use serde::Serialize;

use crate::CliError;

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

/// Coordinate complex general Matrix Market, 1-indexed, exact zeros omitted.
pub fn write_matrix_market(path: &Path, m: &Mat<c64>) -> Result<(), CliError> {
    let io = |e| CliError::Io(path.to_path_buf(), e);
    let mut w = create(path)?;
    let zero = c64::new(0.0, 0.0);
    let mut nnz = 0usize;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if m[(i, j)] != zero {
                nnz += 1;
            }
        }
    }
    writeln!(w, "%%MatrixMarket matrix coordinate complex general").map_err(io)?;
    writeln!(w, "{} {} {}", m.nrows(), m.ncols(), nnz).map_err(io)?;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if z != zero {
                writeln!(w, "{} {} {} {}", i + 1, j + 1, z.re, z.im).map_err(io)?;
            }
        }
    }
    w.flush().map_err(io)
}

/// Reads back what [`write_matrix_market`] writes.
pub fn read_matrix_market(path: &Path) -> Result<Mat<c64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    let bad = |msg: &str| CliError::Config { path: path.display().to_string(), message: msg.into() };
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| bad("empty file"))?;
    if header.trim() != "%%MatrixMarket matrix coordinate complex general" {
        return Err(bad("unsupported Matrix Market header"));
    }
    let mut lines = lines.filter(|l| !l.starts_with('%'));
    let size: Vec<usize> = lines
        .next()
        .ok_or_else(|| bad("missing size line"))?
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| bad("bad size line")))
        .collect::<Result<_, _>>()?;
    let [rows, cols, nnz] = size[..] else {
        return Err(bad("bad size line"));
    };
    let mut m = Mat::<c64>::zeros(rows, cols);
    let mut seen = 0;
    for line in lines {
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 4 {
            return Err(bad("bad entry line"));
        }
        let i: usize = t[0].parse().map_err(|_| bad("bad row index"))?;
        let j: usize = t[1].parse().map_err(|_| bad("bad column index"))?;
        let re: f64 = t[2].parse().map_err(|_| bad("bad value"))?;
        let im: f64 = t[3].parse().map_err(|_| bad("bad value"))?;
        if i == 0 || j == 0 || i > rows || j > cols {
            return Err(bad("index out of range"));
        }
        m[(i - 1, j - 1)] = c64::new(re, im);
        seen += 1;
    }
    if seen != nnz {
        return Err(bad("entry count does not match the size line"));
    }
    Ok(m)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

pub fn csv_writer(path: &Path) -> Result<csv::Writer<File>, CliError> {
    csv::Writer::from_path(path).map_err(CliError::from)
}

/// Complex matrix as nested `[re, im]` pairs, row-major.
pub fn matrix_rows(m: &Mat<c64>) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}
