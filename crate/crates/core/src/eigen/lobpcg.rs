//! Locally optimal block preconditioned conjugate gradient iteration for the
//! smallest eigenpairs of `A x = lambda B x`, optionally restricted to the
//! complement of the constant vector.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::factor::IcPreconditioner;
use crate::sparse::SparseSymMatrix;

/// Columns whose B-norm falls below this after orthogonalization are dropped
/// from the trial subspace.
const DROP_TOL: f64 = 1e-10;

pub(crate) enum BOperator<'a> {
    Identity,
    Matrix(&'a SparseSymMatrix),
    Diagonal(&'a [f64]),
}

impl BOperator<'_> {
    pub(crate) fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            BOperator::Identity => x.to_vec(),
            BOperator::Matrix(m) => m.mul_vec(x),
            BOperator::Diagonal(d) => x.iter().zip(d.iter()).map(|(a, b)| a * b).collect(),
        }
    }
}

/// Linear constraint keeping iterates orthogonal to the constant vector.
#[derive(Clone, Copy)]
pub(crate) enum Constraint<'a> {
    None,
    /// `1^T v = 0`
    Ones,
    /// `1^T D v = 0` for the given diagonal `D`.
    WeightedOnes(&'a [f64]),
}

impl Constraint<'_> {
    pub(crate) fn project(&self, v: &mut [f64]) {
        match *self {
            Constraint::None => {}
            Constraint::Ones => {
                let mean = v.iter().sum::<f64>() / v.len() as f64;
                v.iter_mut().for_each(|x| *x -= mean);
            }
            Constraint::WeightedOnes(d) => {
                let num: f64 = v.iter().zip(d).map(|(a, b)| a * b).sum();
                let den: f64 = d.iter().sum();
                if den > 0.0 {
                    let c = num / den;
                    v.iter_mut().for_each(|x| *x -= c);
                }
            }
        }
    }
}

pub(crate) struct Problem<'a> {
    pub a: &'a SparseSymMatrix,
    pub b: BOperator<'a>,
    pub prec: &'a IcPreconditioner,
    pub constraint: Constraint<'a>,
}

pub(crate) struct Outcome {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub iterations: usize,
    /// Ritz value of the tracked column after each Rayleigh-Ritz step.
    pub history: Vec<f64>,
    /// `|<x, c>| / ||x||` of the tracked column at each step, where `c` is the
    /// constraint direction; empty when unconstrained.
    pub constraint_history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

/// Orthonormalizes `cols` in the B-inner product with two passes of
/// classical Gram-Schmidt. Columns that become numerically dependent are
/// dropped. Returns the basis together with `B` applied to it.
fn b_orthonormalize(problem: &Problem<'_>, cols: Vec<Vec<f64>>) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
    let mut bq: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
    for mut s in cols {
        problem.constraint.project(&mut s);
        let bs = problem.b.apply(&s);
        let n0 = dot(&s, &bs);
        if !(n0 > 0.0) || !n0.is_finite() {
            continue;
        }
        let inv = 1.0 / n0.sqrt();
        s.iter_mut().for_each(|x| *x *= inv);
        for _ in 0..2 {
            let coeffs: Vec<f64> = bq.iter().map(|bqi| dot(bqi, &s)).collect();
            for (qi, c) in q.iter().zip(coeffs) {
                axpy(&mut s, -c, qi);
            }
        }
        let bs = problem.b.apply(&s);
        let n1 = dot(&s, &bs);
        if !(n1 > DROP_TOL * DROP_TOL) {
            continue;
        }
        let inv = 1.0 / n1.sqrt();
        q.push(s.into_iter().map(|x| x * inv).collect());
        bq.push(bs.into_iter().map(|x| x * inv).collect());
    }
    (q, bq)
}

/// Rayleigh-Ritz on a B-orthonormal basis: returns ascending Ritz values and
/// the coefficient matrix (columns are Ritz vectors in the basis).
fn rayleigh_ritz(aq: &[Vec<f64>], q: &[Vec<f64>]) -> (Vec<f64>, DMatrix<f64>) {
    let m = q.len();
    let g = DMatrix::from_fn(m, m, |i, j| {
        let v = dot(&q[i], &aq[j]);
        let w = dot(&q[j], &aq[i]);
        0.5 * (v + w)
    });
    let eig = SymmetricEigen::new(g);
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .total_cmp(&eig.eigenvalues[b])
            .then(a.cmp(&b))
    });
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let coeffs = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, idx[c])]);
    (values, coeffs)
}

fn combine(basis: &[Vec<f64>], coeffs: &DMatrix<f64>, col: usize, from: usize) -> Vec<f64> {
    let n = basis[0].len();
    let mut out = vec![0.0; n];
    for (r, b) in basis.iter().enumerate().skip(from) {
        let c = coeffs[(r, col)];
        if c != 0.0 {
            axpy(&mut out, c, b);
        }
    }
    out
}

/// Runs the iteration from the initial block `x0` and tracks column
/// `target` for the history. Returns `None` when the initial block is rank
/// deficient after applying the constraint.
pub(crate) fn run(
    problem: &Problem<'_>,
    x0: Vec<Vec<f64>>,
    target: usize,
    tol: f64,
    max_iter: usize,
) -> Option<Outcome> {
    let k = x0.len();
    let (mut x, mut bx) = b_orthonormalize(problem, x0);
    if x.len() < k {
        return None;
    }
    let mut ax: Vec<Vec<f64>> = x.iter().map(|v| problem.a.mul_vec(v)).collect();
    let (vals, c) = rayleigh_ritz(&ax, &x);
    let rotate = |cols: &[Vec<f64>], c: &DMatrix<f64>| -> Vec<Vec<f64>> {
        (0..k).map(|j| combine(cols, c, j, 0)).collect()
    };
    let mut lambda: Vec<f64> = vals[..k].to_vec();
    x = rotate(&x, &c);
    ax = rotate(&ax, &c);
    bx = rotate(&bx, &c);

    let mut p: Vec<Option<Vec<f64>>> = vec![None; k];
    let mut history = vec![lambda[target]];
    let mut constraint_history = Vec::new();
    let track_constraint = |v: &[f64], out: &mut Vec<f64>| {
        let c = match problem.constraint {
            Constraint::None => return,
            Constraint::Ones => v.iter().sum::<f64>(),
            Constraint::WeightedOnes(d) => dot(v, d) / norm(d),
        };
        let scale = match problem.constraint {
            Constraint::Ones => (v.len() as f64).sqrt(),
            _ => 1.0,
        };
        out.push(c.abs() / (scale * norm(v)));
    };
    track_constraint(&x[target], &mut constraint_history);

    let mut residuals = vec![f64::INFINITY; k];
    let mut iterations = 0;
    loop {
        let r: Vec<Vec<f64>> = (0..k)
            .map(|j| {
                let mut rj = ax[j].clone();
                axpy(&mut rj, -lambda[j], &bx[j]);
                rj
            })
            .collect();
        for j in 0..k {
            residuals[j] = norm(&r[j]) / norm(&x[j]);
        }
        let active: Vec<usize> = (0..k).filter(|&j| !(residuals[j] <= tol)).collect();
        if active.is_empty() || iterations >= max_iter {
            break;
        }
        iterations += 1;

        let mut basis = x.clone();
        for &j in &active {
            let mut w = problem.prec.apply(&r[j]);
            problem.constraint.project(&mut w);
            basis.push(w);
        }
        for &j in &active {
            if let Some(pj) = &p[j] {
                basis.push(pj.clone());
            }
        }
        // X is already B-orthonormal, so the first k columns survive as is.
        let (q, bq) = b_orthonormalize(problem, basis);
        if q.len() < k {
            break;
        }
        let aq: Vec<Vec<f64>> = q.iter().map(|v| problem.a.mul_vec(v)).collect();
        let (vals, c) = rayleigh_ritz(&aq, &q);
        lambda = vals[..k].to_vec();
        let new_x: Vec<Vec<f64>> = (0..k).map(|j| combine(&q, &c, j, 0)).collect();
        for j in 0..k {
            p[j] = if q.len() > k {
                Some(combine(&q, &c, j, k))
            } else {
                None
            };
        }
        ax = (0..k).map(|j| combine(&aq, &c, j, 0)).collect();
        bx = (0..k).map(|j| combine(&bq, &c, j, 0)).collect();
        x = new_x;
        history.push(lambda[target]);
        track_constraint(&x[target], &mut constraint_history);
        if q.len() == k {
            // The trial subspace no longer grows, so X cannot improve.
            break;
        }
    }
    for j in 0..k {
        let mut rj = ax[j].clone();
        axpy(&mut rj, -lambda[j], &bx[j]);
        residuals[j] = norm(&rj) / norm(&x[j]);
    }
    Some(Outcome {
        values: lambda,
        vectors: x,
        iterations,
        history,
        constraint_history,
    })
}
