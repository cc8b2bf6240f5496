//! Smallest eigenpairs of the graph eigenproblems behind each partitioning
//! objective.

mod dense;
mod lobpcg;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::IcPreconditioner;
use crate::laplacian::Laplacians;
use crate::sparse::SparseSymMatrix;

use lobpcg::{BOperator, Constraint, Problem};

/// Problems up to this size are solved densely.
pub const DENSE_EIG_LIMIT: usize = 24;

/// Which eigenproblem to solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigKind {
    /// `L_w v = lambda L v`, `v` orthogonal to `1`.
    CbsRatio,
    /// `L v = lambda v`, second smallest pair.
    Fiedler,
    /// `L_w v = lambda v`, second smallest pair.
    MinCut,
    /// `L_w v = lambda D_w v`, `v` D_w-orthogonal to `1`.
    Mcut,
}

impl EigKind {
    /// Block size used when none is requested.
    pub fn default_block_size(self) -> usize {
        match self {
            EigKind::CbsRatio | EigKind::Mcut => 1,
            EigKind::Fiedler | EigKind::MinCut => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigProblemSpec {
    pub kind: EigKind,
    /// Bound on `||A v - lambda B v|| / ||v||`.
    pub tolerance: f64,
    pub max_iter: usize,
    /// 1 or 2. With 1, the Fiedler and MinCut problems are solved on the
    /// complement of `1` instead of taking the second Ritz pair.
    pub block_size: usize,
    /// Shift for the incomplete Cholesky preconditioner.
    pub sigma: f64,
    pub droptol: f64,
    pub seed: u64,
}

impl EigProblemSpec {
    pub fn new(kind: EigKind) -> Self {
        EigProblemSpec {
            kind,
            tolerance: 1e-4,
            max_iter: 500,
            block_size: kind.default_block_size(),
            sigma: 0.1,
            droptol: 1e-3,
            seed: 42,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig(
                "eigensolver tolerance must be positive".into(),
            ));
        }
        if !(1..=2).contains(&self.block_size) {
            return Err(Error::InvalidConfig("block size must be 1 or 2".into()));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::InvalidConfig("sigma must be positive".into()));
        }
        if !(self.droptol >= 0.0) {
            return Err(Error::InvalidConfig(
                "drop tolerance must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    fn constrained(&self) -> bool {
        matches!(self.kind, EigKind::CbsRatio | EigKind::Mcut) || self.block_size == 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigResult {
    pub eigenvalue: f64,
    /// Unit Euclidean norm; the largest-magnitude entry is positive.
    pub eigenvector: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Ritz value after each iteration, starting with the initial block.
    pub history: Vec<f64>,
    /// `|<v_k, c>| / ||v_k||` per iterate for the constraint direction `c`.
    pub constraint_history: Vec<f64>,
}

/// Operator pair `(A, B)` of a problem kind.
fn operators<'a>(kind: EigKind, lap: &'a Laplacians) -> (&'a SparseSymMatrix, BOperator<'a>) {
    match kind {
        EigKind::CbsRatio => (&lap.weighted, BOperator::Matrix(&lap.standard)),
        EigKind::Fiedler => (&lap.standard, BOperator::Identity),
        EigKind::MinCut => (&lap.weighted, BOperator::Identity),
        EigKind::Mcut => (&lap.weighted, BOperator::Diagonal(&lap.weighted_degree)),
    }
}

fn constraint_of<'a>(spec: &EigProblemSpec, lap: &'a Laplacians) -> Constraint<'a> {
    if !spec.constrained() {
        Constraint::None
    } else if spec.kind == EigKind::Mcut {
        Constraint::WeightedOnes(&lap.weighted_degree)
    } else {
        Constraint::Ones
    }
}

/// Evaluates `||A v - lambda B v|| / ||v||` for the operators of `kind`.
pub fn residual_norm(kind: EigKind, lap: &Laplacians, lambda: f64, v: &[f64]) -> f64 {
    let (a, b) = operators(kind, lap);
    let av = a.mul_vec(v);
    let bv = b.apply(v);
    let r: f64 = av
        .iter()
        .zip(&bv)
        .map(|(x, y)| (x - lambda * y).powi(2))
        .sum();
    let nv: f64 = v.iter().map(|x| x * x).sum();
    (r / nv).sqrt()
}

fn normalize_sign(v: &mut [f64]) {
    let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut pivot = 0;
    for (k, x) in v.iter().enumerate() {
        if x.abs() > v[pivot].abs() {
            pivot = k;
        }
    }
    let s = if v[pivot] < 0.0 {
        -1.0 / nrm
    } else {
        1.0 / nrm
    };
    v.iter_mut().for_each(|x| *x *= s);
}

/// Computes the eigenpair of `spec.kind` that drives the split.
///
/// For constrained problems this is the smallest pair on the constraint
/// complement; for block runs without constraint it is the second smallest
/// Ritz pair. Non-convergence is reported through `converged` rather than
/// as an error.
pub fn lobpcg_smallest(spec: &EigProblemSpec, lap: &Laplacians) -> Result<EigResult> {
    spec.validate()?;
    let n = lap.weighted.n();
    if n < 2 {
        return Err(Error::InvalidConfig(
            "eigenproblem needs at least two vertices".into(),
        ));
    }
    let (a, b) = operators(spec.kind, lap);
    let constraint = constraint_of(spec, lap);
    let k = spec.block_size;
    let target = if spec.constrained() { 0 } else { 1 };
    let k = k.max(target + 1);

    let (mut value, mut vector, iterations, history, constraint_history) =
        if n <= DENSE_EIG_LIMIT.max(4 * k) {
            let (val, vec) = dense::smallest(a, &b, constraint, target)?;
            (val, vec, 0, vec![val], Vec::new())
        } else {
            let prec = IcPreconditioner::new(a, spec.droptol, spec.sigma)?;
            let problem = Problem {
                a,
                b,
                prec: &prec,
                constraint,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let x0: Vec<Vec<f64>> = (0..k)
                .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let out = lobpcg::run(&problem, x0, target, spec.tolerance, spec.max_iter)
                .ok_or(Error::DegenerateVector)?;
            (
                out.values[target],
                out.vectors[target].clone(),
                out.iterations,
                out.history,
                out.constraint_history,
            )
        };
    normalize_sign(&mut vector);
    let residual = residual_norm(spec.kind, lap, value, &vector);
    if value < 0.0 && value > -1e-12 {
        value = 0.0;
    }
    Ok(EigResult {
        eigenvalue: value,
        eigenvector: vector,
        residual_norm: residual,
        iterations,
        converged: residual <= spec.tolerance,
        history,
        constraint_history,
    })
}

/// `v^T L_w v / v^T L v`.
pub fn rayleigh_quotient(v: &[f64], lw: &SparseSymMatrix, l: &SparseSymMatrix) -> Result<f64> {
    if v.len() != l.n() || v.len() != lw.n() {
        return Err(Error::DimensionMismatch {
            expected: l.n(),
            found: v.len(),
        });
    }
    let den = l.quad_form(v);
    let vv: f64 = v.iter().map(|x| x * x).sum();
    if !(den > 1e-14 * l.frobenius_norm() * vv) {
        return Err(Error::DegenerateDenominator);
    }
    Ok(lw.quad_form(v) / den)
}
