//! Plain-text partition files: `#` comment lines, then one subdomain per
//! line as space-separated 0-based vertex indices.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::sparse::VertexSet;

pub fn write_partition<W: Write>(
    subdomains: &[VertexSet],
    header: &[String],
    mut w: W,
) -> Result<()> {
    for h in header {
        for line in h.lines() {
            writeln!(w, "# {line}")?;
        }
    }
    for s in subdomains {
        let line: Vec<String> = s.iter().map(usize::to_string).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Reads subdomains back. Blank lines are skipped; every other non-comment
/// line must hold at least one index and no index may repeat within a line.
pub fn read_partition<R: BufRead>(reader: R) -> Result<Vec<VertexSet>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut ids = Vec::new();
        for tok in t.split_whitespace() {
            ids.push(tok.parse::<usize>().map_err(|_| Error::Parse {
                line: idx + 1,
                msg: format!("invalid vertex index '{tok}'"),
            })?);
        }
        let count = ids.len();
        let set = VertexSet::new(ids);
        if set.len() != count {
            return Err(Error::Parse {
                line: idx + 1,
                msg: "repeated vertex index".into(),
            });
        }
        out.push(set);
    }
    Ok(out)
}

/// Checks that `subdomains` are disjoint and cover `0..n`.
pub fn check_partition(subdomains: &[VertexSet], n: usize) -> Result<()> {
    let mut owner = vec![false; n];
    for s in subdomains {
        if s.is_empty() {
            return Err(Error::InvalidBipartition("empty subdomain"));
        }
        for &v in s {
            if v >= n {
                return Err(Error::IndexOutOfRange { index: v, n });
            }
            if owner[v] {
                return Err(Error::InvalidBipartition("subdomains overlap"));
            }
            owner[v] = true;
        }
    }
    if owner.iter().any(|&o| !o) {
        return Err(Error::InvalidBipartition(
            "subdomains do not cover the vertex set",
        ));
    }
    Ok(())
}
