//! Iteration-count experiments: partition, build the Schwarz preconditioner,
//! run PCG over several random right-hand sides and average.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::{recursive_partition, Method, PartitionConfig, PartitionResult};
use crate::solver::{
    pcg_with_guess, random_vector, AsPreconditioner, IdentityPreconditioner, Preconditioner,
    SolveReport,
};
use crate::sparse::SparseSymMatrix;

/// Preconditioner used in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Unpreconditioned CG.
    None,
    Schwarz(Method),
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::None => f.write_str("none"),
            Scheme::Schwarz(m) => write!(f, "{m}"),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("none") {
            Ok(Scheme::None)
        } else {
            s.parse().map(Scheme::Schwarz)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Partitioner settings; the method is taken from the scheme.
    pub partition: PartitionConfig,
    pub overlap: usize,
    pub tol: f64,
    pub maxit: usize,
    /// One PCG run per seed, each with its own right-hand side and guess.
    pub seeds: Vec<u64>,
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn new(max_size: usize) -> Self {
        ExperimentConfig {
            partition: PartitionConfig::new(Method::Cbs, max_size),
            overlap: 0,
            tol: 1e-8,
            maxit: 5000,
            seeds: vec![1, 2, 3, 4],
            timing: false,
        }
    }
}

/// Right-hand side with unit norm and initial guess for one seed.
pub fn sample_system(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = random_vector(n, &mut rng);
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    b.iter_mut().for_each(|x| *x /= nb);
    let x0 = random_vector(n, &mut rng);
    (b, x0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub scheme: Scheme,
    pub partition: Option<PartitionResult>,
    pub reports: Vec<SolveReport>,
    pub mean_iterations: f64,
    pub all_converged: bool,
    pub seconds: f64,
}

impl CaseResult {
    pub fn subdomain_count(&self) -> usize {
        self.partition.as_ref().map_or(1, |p| p.subdomains.len())
    }
}

/// Runs one scheme on `a`, which should already be diagonally scaled.
pub fn run_case(a: &SparseSymMatrix, scheme: Scheme, cfg: &ExperimentConfig) -> Result<CaseResult> {
    if cfg.seeds.is_empty() {
        return Err(Error::InvalidConfig("at least one seed is required".into()));
    }
    let start = Instant::now();
    let (partition, prec): (Option<PartitionResult>, Box<dyn Preconditioner>) = match scheme {
        Scheme::None => (None, Box::new(IdentityPreconditioner)),
        Scheme::Schwarz(method) => {
            let pc = PartitionConfig {
                method,
                ..cfg.partition
            };
            let part = recursive_partition(a, &pc)?;
            let prec = AsPreconditioner::new(a, &part.subdomains, cfg.overlap)?;
            (Some(part), Box::new(prec))
        }
    };
    let mut reports = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let (b, x0) = sample_system(a.n(), seed);
        reports.push(pcg_with_guess(
            a,
            &b,
            prec.as_ref(),
            x0,
            cfg.tol,
            cfg.maxit,
        )?);
    }
    let mean_iterations =
        reports.iter().map(|r| r.iterations as f64).sum::<f64>() / reports.len() as f64;
    Ok(CaseResult {
        scheme,
        partition,
        all_converged: reports.iter().all(|r| r.converged),
        reports,
        mean_iterations,
        seconds: if cfg.timing {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        },
    })
}

/// One line of the benchmark table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub matrix: String,
    /// `None` when the matrix file was not found.
    pub n: Option<usize>,
    pub method: String,
    pub s: Option<usize>,
    pub overlap: usize,
    pub iterations: Option<f64>,
    pub status: RowStatus,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Converged,
    NotConverged,
    Missing,
    Failed,
}

impl RowStatus {
    fn as_str(self) -> &'static str {
        match self {
            RowStatus::Converged => "true",
            RowStatus::NotConverged => "false",
            RowStatus::Missing => "missing",
            RowStatus::Failed => "failed",
        }
    }
}

pub const CSV_HEADER: &str = "matrix,n,method,s,overlap,iterations,converged,seconds";

impl BenchRow {
    pub fn from_case(matrix: &str, n: usize, overlap: usize, case: &CaseResult) -> Self {
        BenchRow {
            matrix: matrix.to_string(),
            n: Some(n),
            method: case.scheme.to_string(),
            s: Some(case.subdomain_count()),
            overlap,
            iterations: Some(case.mean_iterations),
            status: if case.all_converged {
                RowStatus::Converged
            } else {
                RowStatus::NotConverged
            },
            seconds: case.seconds,
        }
    }

    pub fn unavailable(matrix: &str, scheme: Scheme, overlap: usize, status: RowStatus) -> Self {
        BenchRow {
            matrix: matrix.to_string(),
            n: None,
            method: scheme.to_string(),
            s: None,
            overlap,
            iterations: None,
            status,
            seconds: 0.0,
        }
    }

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{:.3}",
            self.matrix,
            opt(self.n.map(|v| v.to_string())),
            self.method,
            opt(self.s.map(|v| v.to_string())),
            self.overlap,
            opt(self.iterations.map(|v| format!("{v:.2}"))),
            self.status.as_str(),
            self.seconds
        )
    }
}

pub fn write_bench_csv<W: Write>(rows: &[BenchRow], header: &[String], mut w: W) -> Result<()> {
    for h in header {
        for line in h.lines() {
            writeln!(w, "# {line}")?;
        }
    }
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", r.to_csv())?;
    }
    Ok(())
}

/// Reference mean iteration counts for one SuiteSparse matrix, in the
/// column order CBS, MINcut, Mcut, standard (RSB).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceRow {
    pub matrix: &'static str,
    pub n: usize,
    pub iterations: [f64; 4],
}

/// Methods in the column order of [`ReferenceRow::iterations`].
pub const REFERENCE_METHODS: [Method; 4] = [Method::Cbs, Method::MinCut, Method::Mcut, Method::Rsb];

const fn row(matrix: &'static str, n: usize, it: [f64; 4]) -> ReferenceRow {
    ReferenceRow {
        matrix,
        n,
        iterations: it,
    }
}

/// Nonoverlapping Schwarz, `maxSize = n / 20`.
pub const REFERENCE_NONOVERLAPPING: [ReferenceRow; 3] = [
    row("bcsstk13", 2003, [663.0, 683.0, 636.0, 889.0]),
    row("bcsstk14", 1806, [147.0, 204.0, 187.0, 290.0]),
    row("bcsstk15", 3948, [245.0, 265.0, 283.0, 337.0]),
];

/// Schwarz with two overlap layers, `maxSize = n / 20`.
pub const REFERENCE_OVERLAPPING: [ReferenceRow; 8] = [
    row("bcsstk13", 2003, [111.0, 135.0, 128.0, 142.0]),
    row("bcsstk14", 1806, [49.0, 52.0, 58.0, 54.0]),
    row("bcsstk15", 3948, [85.0, 98.0, 107.0, 106.0]),
    row("bcsstk27", 1224, [29.0, 62.0, 54.0, 61.0]),
    row("ex3", 1821, [76.0, 109.0, 100.0, 119.0]),
    row("ex10hs", 2548, [49.0, 60.0, 60.0, 66.0]),
    row("ex15", 6867, [78.0, 115.0, 117.0, 124.0]),
    row("ex33", 1733, [44.0, 107.0, 68.0, 104.0]),
];

/// Looks for `<name>.mtx` in `dir`.
pub fn find_matrix(dir: &Path, name: &str) -> Option<PathBuf> {
    let p = dir.join(format!("{name}.mtx"));
    p.is_file().then_some(p)
}
