//! Matrix Market coordinate format, restricted to real symmetric matrices.
//!
//! Indices are 1-based on disk and 0-based in memory. Entries may be given in
//! either triangle, but each unordered pair may appear only once.

use std::io::{BufRead, Write};

use super::SparseSymMatrix;
use crate::error::{Error, Result};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Parses a Matrix Market file held in memory.
pub fn parse_matrix_market(text: &str) -> Result<SparseSymMatrix> {
    read_matrix_market(text.as_bytes())
}

/// Reads a `%%MatrixMarket matrix coordinate real symmetric` stream.
///
/// `integer` fields are accepted as real. The result is validated to have a
/// strictly positive diagonal.
pub fn read_matrix_market<R: BufRead>(reader: R) -> Result<SparseSymMatrix> {
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
    let header = header?;
    check_header(&header)?;

    let mut size: Option<(usize, usize)> = None;
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    let mut last_line = 1;
    for (idx, line) in lines {
        let lineno = idx + 1;
        last_line = lineno;
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let mut it = t.split_whitespace();
        match size {
            None => {
                let rows = parse_usize(it.next(), lineno, "row count")?;
                let cols = parse_usize(it.next(), lineno, "column count")?;
                let nnz = parse_usize(it.next(), lineno, "entry count")?;
                if it.next().is_some() {
                    return Err(parse_err(lineno, "trailing tokens on size line"));
                }
                if rows != cols {
                    return Err(parse_err(
                        lineno,
                        format!("matrix is not square ({rows} x {cols})"),
                    ));
                }
                size = Some((rows, nnz));
            }
            Some((n, nnz)) => {
                if entries.len() == nnz {
                    return Err(parse_err(lineno, format!("more than {nnz} entries")));
                }
                let i = parse_usize(it.next(), lineno, "row index")?;
                let j = parse_usize(it.next(), lineno, "column index")?;
                let v: f64 = it
                    .next()
                    .ok_or_else(|| parse_err(lineno, "missing value"))?
                    .parse()
                    .map_err(|_| parse_err(lineno, "invalid value"))?;
                if it.next().is_some() {
                    return Err(parse_err(lineno, "trailing tokens on entry line"));
                }
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(parse_err(
                        lineno,
                        format!("index ({i}, {j}) outside 1..={n}"),
                    ));
                }
                if !v.is_finite() {
                    return Err(parse_err(lineno, "non-finite value"));
                }
                let (r, c) = if i >= j {
                    (i - 1, j - 1)
                } else {
                    (j - 1, i - 1)
                };
                entries.push((r, c, v));
            }
        }
    }
    let (n, nnz) = size.ok_or_else(|| parse_err(last_line, "missing size line"))?;
    if entries.len() != nnz {
        return Err(parse_err(
            last_line,
            format!("expected {nnz} entries, found {}", entries.len()),
        ));
    }

    // Every row needs a diagonal entry, so n is bounded by the entry count
    // before anything of size n is allocated.
    let mut diag_rows: Vec<usize> = entries.iter().filter(|e| e.0 == e.1).map(|e| e.0).collect();
    diag_rows.sort_unstable();
    diag_rows.dedup();
    if diag_rows.len() < n {
        let missing = diag_rows
            .iter()
            .enumerate()
            .find(|&(k, &r)| k != r)
            .map_or(diag_rows.len(), |(k, _)| k);
        return Err(Error::MissingDiagonal(missing));
    }

    let mut keys: Vec<(usize, usize)> = entries.iter().map(|e| (e.0, e.1)).collect();
    keys.sort_unstable();
    if let Some(w) = keys.windows(2).find(|w| w[0] == w[1]) {
        return Err(parse_err(
            last_line,
            format!("duplicate entry ({}, {})", w[0].0 + 1, w[0].1 + 1),
        ));
    }

    let a = SparseSymMatrix::from_triangle_triplets(n, &entries)?;
    a.check_positive_diagonal()?;
    Ok(a)
}

fn check_header(header: &str) -> Result<()> {
    let toks: Vec<String> = header
        .split_whitespace()
        .map(|s| s.to_ascii_lowercase())
        .collect();
    if toks.first().map(String::as_str) != Some("%%matrixmarket") {
        return Err(parse_err(1, "missing %%MatrixMarket banner"));
    }
    if toks.len() != 5 {
        return Err(parse_err(
            1,
            "banner must have object, format, field and symmetry",
        ));
    }
    if toks[1] != "matrix" {
        return Err(parse_err(1, format!("unsupported object '{}'", toks[1])));
    }
    if toks[2] != "coordinate" {
        return Err(parse_err(1, format!("unsupported format '{}'", toks[2])));
    }
    if toks[3] != "real" && toks[3] != "integer" {
        return Err(parse_err(1, format!("unsupported field '{}'", toks[3])));
    }
    if toks[4] != "symmetric" {
        return Err(parse_err(
            1,
            format!("matrix must be symmetric, header says '{}'", toks[4]),
        ));
    }
    Ok(())
}

fn parse_usize(tok: Option<&str>, line: usize, what: &str) -> Result<usize> {
    tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?
        .parse()
        .map_err(|_| parse_err(line, format!("invalid {what}")))
}

/// Writes the lower triangle in Matrix Market coordinate format. Values are
/// printed in shortest round-trip form, so reading back is exact.
pub fn write_matrix_market<W: Write>(
    a: &SparseSymMatrix,
    mut w: W,
    comments: &[String],
) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    for c in comments {
        for line in c.lines() {
            writeln!(w, "% {line}")?;
        }
    }
    let lower: usize = (0..a.n())
        .map(|i| a.row(i).0.iter().filter(|&&j| j <= i).count())
        .sum();
    writeln!(w, "{} {} {}", a.n(), a.n(), lower)?;
    for i in 0..a.n() {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if j <= i {
                writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
            }
        }
    }
    Ok(())
}
