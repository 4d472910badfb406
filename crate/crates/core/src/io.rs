//! File formats.
//!
//! * Design and response: header-less CSV, one row per observation; `y` is a
//!   single column.
//! * Path report: `#schema=1`, a header
//!   `knot,lambda,nnz,inner_iters,stop_reason`, one row per knot, optionally
//!   followed by `#selector=<criterion>,<chosen_knot>,<chosen_lambda>,<value>`.
//! * Coefficients: `knot,index,value` for every stored nonzero.
//! * Benchmark metrics: `#schema=1` and one row per grid cell.
//! * Instance sidecar: JSON holding the generating [`SimConfig`] and the
//!   [`TruthModel`].
//!
//! Floats are written with Rust's shortest round-trip formatting.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bench::MetricsRecord;
use crate::datagen::SimConfig;
use crate::error::{Result, SnapError};
use crate::path::PathResult;
use crate::problem::TruthModel;
use crate::select::SelectorResult;

pub const SCHEMA_LINE: &str = "#schema=1";
pub const PATH_HEADER: &str = "knot,lambda,nnz,inner_iters,stop_reason";
pub const COEF_HEADER: &str = "knot,index,value";
pub const METRICS_HEADER: &str =
    "cell,solver,selector,reps,failures,time_s,time_sd,ms,ms_sd,cm,cm_sd,ae,ae_sd,re,re_sd,containment";

fn reader<R: Read>(src: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(src)
}

fn parse_field(s: &str, row: usize, col: usize) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| SnapError::Parse(format!("row {}, column {}: `{s}` is not a number", row + 1, col + 1)))
}

/// Reads a header-less numeric CSV into an `n x p` matrix.
pub fn read_matrix_from<R: Read>(src: R) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in reader(src).records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(j, s)| parse_field(s, i, j))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    if n == 0 || p == 0 {
        return Err(SnapError::Parse("empty matrix".into()));
    }
    Ok(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    read_matrix_from(File::open(path)?)
}

/// Reads a single-column CSV.
pub fn read_vector(path: &Path) -> Result<DVector<f64>> {
    let m = read_matrix(path)?;
    if m.ncols() != 1 {
        return Err(SnapError::Parse(format!(
            "{}: expected one column, found {}",
            path.display(),
            m.ncols()
        )));
    }
    Ok(m.column(0).clone_owned())
}

pub fn write_matrix(path: &Path, x: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let mut row = Vec::with_capacity(x.ncols());
    for i in 0..x.nrows() {
        row.clear();
        row.extend(x.row(i).iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_vector(path: &Path, v: &DVector<f64>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for x in v.iter() {
        writeln!(out, "{x}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_path_report<W: Write + ?Sized>(out: &mut W, path: &PathResult, selection: Option<&SelectorResult>) -> Result<()> {
    writeln!(out, "{SCHEMA_LINE}")?;
    writeln!(out, "{PATH_HEADER}")?;
    for r in &path.records {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.knot,
            r.lambda,
            r.beta.nnz(),
            r.inner_iterations,
            r.stop_reason.as_str()
        )?;
    }
    if let Some(s) = selection {
        writeln!(
            out,
            "#selector={},{},{},{}",
            s.criterion,
            s.chosen_knot,
            s.chosen_lambda,
            s.value()
        )?;
    }
    Ok(())
}

pub fn write_path_csv(file: &Path, path: &PathResult, selection: Option<&SelectorResult>) -> Result<()> {
    let mut out = BufWriter::new(File::create(file)?);
    write_path_report(&mut out, path, selection)?;
    out.flush()?;
    Ok(())
}

pub fn write_coefficients<W: Write + ?Sized>(out: &mut W, path: &PathResult) -> Result<()> {
    writeln!(out, "{COEF_HEADER}")?;
    for r in &path.records {
        for (j, v) in r.beta.indices.iter().zip(&r.beta.values) {
            writeln!(out, "{},{},{}", r.knot, j, v)?;
        }
    }
    Ok(())
}

pub fn write_coefficients_csv(file: &Path, path: &PathResult) -> Result<()> {
    let mut out = BufWriter::new(File::create(file)?);
    write_coefficients(&mut out, path)?;
    out.flush()?;
    Ok(())
}

/// One data row of a path report.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct PathRow {
    pub knot: usize,
    pub lambda: f64,
    pub nnz: usize,
    pub inner_iters: usize,
    pub stop_reason: String,
}

/// Parses the rows of a path report, skipping comment lines.
pub fn read_path_rows<R: Read>(src: R) -> Result<Vec<PathRow>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(src);
    rdr.deserialize().map(|r| r.map_err(SnapError::from)).collect()
}

pub fn write_metrics<W: Write + ?Sized>(out: &mut W, records: &[MetricsRecord]) -> Result<()> {
    writeln!(out, "{SCHEMA_LINE}")?;
    writeln!(out, "{METRICS_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "\"{}\",{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.label,
            r.solver.as_str(),
            r.criterion,
            r.reps,
            r.failures,
            r.time_s,
            r.time_sd,
            r.ms,
            r.ms_sd,
            r.cm,
            r.cm_sd,
            r.ae,
            r.ae_sd,
            r.re,
            r.re_sd,
            r.containment
        )?;
    }
    Ok(())
}

/// JSON sidecar of a generated instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSidecar {
    pub config: SimConfig,
    pub truth: TruthModel,
}

pub fn write_sidecar(path: &Path, sidecar: &InstanceSidecar) -> Result<()> {
    let out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(out, sidecar)?;
    Ok(())
}

pub fn read_sidecar(path: &Path) -> Result<InstanceSidecar> {
    Ok(serde_json::from_reader(File::open(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_trimmed_rows() {
        let m = read_matrix_from("1, 2.5\n-3,4e-1\n".as_bytes()).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 2.5, -3.0, 0.4]));
    }

    #[test]
    fn ragged_and_bad_input() {
        assert!(read_matrix_from("1,2\n3\n".as_bytes()).is_err());
        let err = read_matrix_from("1,x\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("column 2"), "{err}");
        assert!(read_matrix_from("".as_bytes()).is_err());
    }

    #[test]
    fn matrix_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let x = DMatrix::from_fn(3, 4, |i, j| (i as f64 + 0.1) / (j as f64 + 3.0));
        let file = dir.path().join("x.csv");
        write_matrix(&file, &x).unwrap();
        assert_eq!(read_matrix(&file).unwrap(), x);
        let y = DVector::from_column_slice(&[1.0 / 3.0, -2.0, 1e-17]);
        let file = dir.path().join("y.csv");
        write_vector(&file, &y).unwrap();
        assert_eq!(read_vector(&file).unwrap(), y);
    }
}
