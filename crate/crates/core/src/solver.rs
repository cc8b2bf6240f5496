//! Additive Schwarz preconditioning and the conjugate gradient driver.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cbs::cholesky_lower;
use crate::error::{Error, Result};
use crate::factor::SparseCholesky;
use crate::sparse::{Graph, SparseSymMatrix, VertexSet};

/// Subdomains up to this size are factored densely.
pub const DENSE_SUBDOMAIN_LIMIT: usize = 64;

/// Grows every subdomain by `layers` rounds of adding all graph neighbors.
pub fn expand_overlap(subdomains: &[VertexSet], g: &Graph, layers: usize) -> Vec<VertexSet> {
    if layers == 0 {
        return subdomains.to_vec();
    }
    let mut mark = vec![usize::MAX; g.n()];
    subdomains
        .iter()
        .enumerate()
        .map(|(k, set)| {
            let mut members: Vec<usize> = set.as_slice().to_vec();
            for &v in &members {
                mark[v] = k;
            }
            let mut frontier = members.clone();
            for _ in 0..layers {
                let mut next = Vec::new();
                for &u in &frontier {
                    for &x in g.neighbors(u) {
                        if mark[x] != k {
                            mark[x] = k;
                            next.push(x);
                        }
                    }
                }
                members.extend_from_slice(&next);
                frontier = next;
            }
            VertexSet::new(members)
        })
        .collect()
}

/// Symmetric positive definite operator approximating `A^{-1}`.
pub trait Preconditioner {
    fn apply(&self, r: &[f64]) -> Vec<f64>;
}

/// `M = I`.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        r.to_vec()
    }
}

#[derive(Debug, Clone)]
enum LocalSolver {
    Dense(DMatrix<f64>),
    Sparse(SparseCholesky),
}

impl LocalSolver {
    fn solve(&self, b: Vec<f64>) -> Vec<f64> {
        match self {
            LocalSolver::Dense(l) => {
                let mut x = DVector::from_vec(b);
                l.solve_lower_triangular_mut(&mut x);
                l.tr_solve_lower_triangular_mut(&mut x);
                x.data.into()
            }
            LocalSolver::Sparse(c) => c.solve(&b),
        }
    }
}

/// `w = sum_k E_k A_k^{-1} E_k^T r` with `A_k = A(V_k, V_k)`.
#[derive(Debug, Clone)]
pub struct AsPreconditioner {
    n: usize,
    subdomains: Vec<VertexSet>,
    solvers: Vec<LocalSolver>,
    overlap: usize,
}

impl AsPreconditioner {
    /// Expands `subdomains` by `overlap` layers in the graph of `a` and
    /// factors every block. The sets must cover `0..n`.
    pub fn new(a: &SparseSymMatrix, subdomains: &[VertexSet], overlap: usize) -> Result<Self> {
        let n = a.n();
        let subdomains = if overlap > 0 {
            expand_overlap(subdomains, &Graph::from_matrix(a), overlap)
        } else {
            subdomains.to_vec()
        };
        let mut covered = vec![false; n];
        for s in &subdomains {
            if s.is_empty() {
                return Err(Error::EmptySet);
            }
            for &v in s {
                if v >= n {
                    return Err(Error::IndexOutOfRange { index: v, n });
                }
                covered[v] = true;
            }
        }
        if covered.iter().any(|&c| !c) {
            return Err(Error::InvalidBipartition(
                "subdomains do not cover the vertex set",
            ));
        }
        let solvers = subdomains
            .iter()
            .map(|s| {
                let sub = a.submatrix(s)?;
                if s.len() <= DENSE_SUBDOMAIN_LIMIT {
                    Ok(LocalSolver::Dense(cholesky_lower(sub.to_dense(), s)?))
                } else {
                    SparseCholesky::new(&sub)
                        .map(LocalSolver::Sparse)
                        .map_err(|e| match e {
                            Error::NotPositiveDefinite { column, pivot } => {
                                Error::NotPositiveDefinite {
                                    column: s.as_slice()[column],
                                    pivot,
                                }
                            }
                            other => other,
                        })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(AsPreconditioner {
            n,
            subdomains,
            solvers,
            overlap,
        })
    }

    pub fn subdomains(&self) -> &[VertexSet] {
        &self.subdomains
    }

    pub fn overlap(&self) -> usize {
        self.overlap
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

impl Preconditioner for AsPreconditioner {
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        as_apply(self, r)
    }
}

/// Applies the preconditioner. Corrections are summed in subdomain order.
pub fn as_apply(prec: &AsPreconditioner, r: &[f64]) -> Vec<f64> {
    assert_eq!(r.len(), prec.n, "residual length");
    let mut w = vec![0.0; prec.n];
    for (set, solver) in prec.subdomains.iter().zip(&prec.solvers) {
        let local: Vec<f64> = set.iter().map(|&v| r[v]).collect();
        let d = solver.solve(local);
        for (&v, x) in set.iter().zip(d) {
            w[v] += x;
        }
    }
    w
}

/// Outcome of a conjugate gradient run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    /// `||r_k|| / ||b||` for `k = 0..=iterations`, from the recursively
    /// updated residual.
    pub history: Vec<f64>,
    /// `||b - A x|| / ||b||` recomputed from the returned iterate.
    pub final_true_residual: f64,
    #[serde(skip)]
    pub solution: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Vector with independent uniform(-1, 1) entries.
pub fn random_vector(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Preconditioned CG from a random initial guess drawn with `seed`.
pub fn pcg(
    a: &SparseSymMatrix,
    b: &[f64],
    prec: &dyn Preconditioner,
    tol: f64,
    maxit: usize,
    seed: u64,
) -> Result<SolveReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0 = random_vector(a.n(), &mut rng);
    pcg_with_guess(a, b, prec, x0, tol, maxit)
}

/// Preconditioned CG from `x0`, stopping once `||r_k|| / ||b|| <= tol`.
pub fn pcg_with_guess(
    a: &SparseSymMatrix,
    b: &[f64],
    prec: &dyn Preconditioner,
    x0: Vec<f64>,
    tol: f64,
    maxit: usize,
) -> Result<SolveReport> {
    let n = a.n();
    for len in [b.len(), x0.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: len,
            });
        }
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig("tolerance must be positive".into()));
    }
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok(SolveReport {
            iterations: 0,
            converged: true,
            history: vec![0.0],
            final_true_residual: 0.0,
            solution: vec![0.0; n],
        });
    }
    let mut x = x0;
    let ax = a.mul_vec(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut rel = dot(&r, &r).sqrt() / bnorm;
    let mut history = vec![rel];
    let mut z = prec.apply(&r);
    let mut rz = dot(&r, &z);
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut iterations = 0;
    while rel > tol && iterations < maxit {
        if !(rz > 0.0) {
            return Err(Error::PcgBreakdown(format!(
                "preconditioned residual inner product {rz:e} at iteration {iterations}"
            )));
        }
        a.matvec(&p, &mut q);
        let pap = dot(&p, &q);
        if !(pap > 0.0) {
            return Err(Error::PcgBreakdown(format!(
                "p^T A p = {pap:e} at iteration {iterations}; matrix is not positive definite"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        iterations += 1;
        rel = dot(&r, &r).sqrt() / bnorm;
        history.push(rel);
        if rel <= tol {
            break;
        }
        z = prec.apply(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let ax = a.mul_vec(&x);
    let true_res = b
        .iter()
        .zip(&ax)
        .map(|(bi, ai)| (bi - ai).powi(2))
        .sum::<f64>()
        .sqrt()
        / bnorm;
    Ok(SolveReport {
        iterations,
        converged: rel <= tol,
        history,
        final_true_residual: true_res,
        solution: x,
    })
}
