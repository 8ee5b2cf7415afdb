//! Strict CSV ingestion and emission.
//!
//! Sample files carry a header `x1,...,xm` with an optional trailing
//! `weight` column. Parsing is strict: a malformed header, a ragged row, or
//! a non-numeric (or non-finite) cell is an error naming the file and line.
//! Floats are written with the shortest representation that round-trips, so
//! emitted files are byte-stable across reruns.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::measures::EmpiricalDistribution;
use crate::transport::TransportPlan;

fn parse_error(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

/// Validate a `x1,...,xm[,weight]` header; returns (dim, has_weight).
fn parse_header(path: &Path, line: &str) -> Result<(usize, bool)> {
    let cols: Vec<&str> = line.split(',').map(str::trim).collect();
    let has_weight = cols.last() == Some(&"weight");
    let dim = cols.len() - usize::from(has_weight);
    if dim == 0 {
        return Err(parse_error(path, 1, "header has no coordinate columns"));
    }
    for (i, col) in cols[..dim].iter().enumerate() {
        let expected = format!("x{}", i + 1);
        if *col != expected {
            return Err(parse_error(
                path,
                1,
                format!("expected header column {expected:?}, found {col:?}"),
            ));
        }
    }
    Ok((dim, has_weight))
}

fn parse_cell(path: &Path, line: usize, cell: &str) -> Result<f64> {
    let v: f64 = cell
        .trim()
        .parse()
        .map_err(|_| parse_error(path, line, format!("non-numeric cell {cell:?}")))?;
    if !v.is_finite() {
        return Err(parse_error(path, line, format!("non-finite cell {cell:?}")));
    }
    Ok(v)
}

/// Read a sample file into a distribution. Missing weight column means
/// uniform weights; a present one is renormalized by construction.
pub fn read_samples(path: &Path) -> Result<EmpiricalDistribution> {
    let (rows, weights, _) = read_rows(path, true)?;
    match weights {
        Some(w) => EmpiricalDistribution::new(rows, Some(w)),
        None => EmpiricalDistribution::new(rows, None),
    }
}

/// Read a vector file (one vector per row) for transforms that treat rows
/// as sequences; a weight column is rejected.
pub fn read_vectors(path: &Path) -> Result<Vec<Vec<f64>>> {
    let (rows, _, _) = read_rows(path, false)?;
    Ok(rows)
}

fn read_rows(
    path: &Path,
    allow_weight: bool,
) -> Result<(Vec<Vec<f64>>, Option<Vec<f64>>, usize)> {
    let file = fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let header = match lines.next() {
        Some(l) => l?,
        None => return Err(parse_error(path, 1, "empty file")),
    };
    let (dim, has_weight) = parse_header(path, &header)?;
    if has_weight && !allow_weight {
        return Err(parse_error(path, 1, "weight column not allowed here"));
    }
    let mut rows = Vec::new();
    let mut weights = if has_weight { Some(Vec::new()) } else { None };
    for (idx, line) in lines.enumerate() {
        let line = line?;
        let lineno = idx + 2;
        let cells: Vec<&str> = line.split(',').collect();
        let expected = dim + usize::from(has_weight);
        if cells.len() != expected {
            return Err(parse_error(
                path,
                lineno,
                format!("expected {expected} cells, found {}", cells.len()),
            ));
        }
        let mut row = Vec::with_capacity(dim);
        for cell in &cells[..dim] {
            row.push(parse_cell(path, lineno, cell)?);
        }
        rows.push(row);
        if let Some(w) = weights.as_mut() {
            w.push(parse_cell(path, lineno, cells[dim])?);
        }
    }
    Ok((rows, weights, dim))
}

fn sample_header(dim: usize, with_weight: bool) -> String {
    let mut cols: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    if with_weight {
        cols.push("weight".to_string());
    }
    cols.join(",")
}

/// Write a distribution with its weights.
pub fn write_samples(path: &Path, d: &EmpiricalDistribution) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{}", sample_header(d.dim(), true))?;
    for i in 0..d.len() {
        for x in d.point(i) {
            write!(w, "{x},")?;
        }
        writeln!(w, "{}", d.weights()[i])?;
    }
    w.flush()?;
    Ok(())
}

/// Write a bare point matrix (rows = samples), no weight column.
pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{}", sample_header(m.cols, false))?;
    for row in m.data.chunks_exact(m.cols) {
        let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_vectors(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    let dim = rows.first().map(|r| r.len()).unwrap_or(0);
    let m = Matrix {
        rows: rows.len(),
        cols: dim,
        data: rows.iter().flatten().copied().collect(),
    };
    write_matrix(path, &m)
}

/// Dump a transport plan as `i,j,mass` triples (nonzero entries, row-major).
pub fn write_plan(path: &Path, plan: &TransportPlan) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "i,j,mass")?;
    for i in 0..plan.mass.rows {
        for j in 0..plan.mass.cols {
            let m = plan.mass.get(i, j);
            if m != 0.0 {
                writeln!(w, "{i},{j},{m}")?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str, contents: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(name);
        fs::write(&path, contents).unwrap();
        (dir, path)
    }

    #[test]
    fn reads_unweighted_samples() {
        let (_d, path) = tmp("a.csv", "x1,x2\n0.5,1\n-2,3.25\n");
        let dist = read_samples(&path).unwrap();
        assert_eq!(dist.len(), 2);
        assert_eq!(dist.dim(), 2);
        assert_eq!(dist.point(1), &[-2.0, 3.25]);
        assert_eq!(dist.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn reads_weighted_samples_and_renormalizes() {
        let (_d, path) = tmp("a.csv", "x1,weight\n0,1\n2,3\n");
        let dist = read_samples(&path).unwrap();
        assert_eq!(dist.weights(), &[0.25, 0.75]);
    }

    #[test]
    fn rejects_non_numeric_cell_with_location() {
        let (_d, path) = tmp("bad.csv", "x1,x2\n1,2\n3,oops\n");
        match read_samples(&path) {
            Err(Error::Parse { line, msg, .. }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("oops"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_header_and_ragged_rows() {
        let (_d, path) = tmp("h.csv", "a,b\n1,2\n");
        assert!(matches!(
            read_samples(&path),
            Err(Error::Parse { line: 1, .. })
        ));

        let (_d2, path2) = tmp("r.csv", "x1,x2\n1,2,3\n");
        assert!(matches!(
            read_samples(&path2),
            Err(Error::Parse { line: 2, .. })
        ));

        let (_d3, path3) = tmp("nan.csv", "x1\nNaN\n");
        assert!(matches!(read_samples(&path3), Err(Error::Parse { .. })));
    }

    #[test]
    fn vector_reader_rejects_weight_column() {
        let (_d, path) = tmp("v.csv", "x1,x2,weight\n1,2,0.5\n");
        assert!(matches!(
            read_vectors(&path),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn roundtrip_is_exact() {
        let dist = EmpiricalDistribution::new(
            vec![vec![0.1 + 0.2, -1.5e-17], vec![3.0, 2.0f64.sqrt()]],
            Some(vec![0.3, 0.7]),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.csv");
        write_samples(&path, &dist).unwrap();
        let back = read_samples(&path).unwrap();
        assert_eq!(back.points_flat(), dist.points_flat());
        assert_eq!(back.weights(), dist.weights());
    }

    #[test]
    fn plan_dump_has_nonzero_triples() {
        let a = EmpiricalDistribution::uniform(vec![vec![0.0], vec![1.0]]).unwrap();
        let b = EmpiricalDistribution::uniform(vec![vec![0.0], vec![1.0]]).unwrap();
        let (_, plan) = crate::transport::wasserstein_exact(&a, &b, 1.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plan.csv");
        write_plan(&path, &plan).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("i,j,mass"));
        // Identity coupling: (0,0,0.5) and (1,1,0.5).
        let rest: Vec<&str> = lines.collect();
        assert_eq!(rest, vec!["0,0,0.5", "1,1,0.5"]);
    }
}
