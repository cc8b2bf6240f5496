//! Dense solve of the small eigenproblems, used below the iterative limit.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::lobpcg::{BOperator, Constraint};
use crate::error::{Error, Result};
use crate::sparse::SparseSymMatrix;

fn b_dense(b: &BOperator<'_>, n: usize) -> DMatrix<f64> {
    match b {
        BOperator::Identity => DMatrix::identity(n, n),
        BOperator::Matrix(m) => m.to_dense(),
        BOperator::Diagonal(d) => DMatrix::from_diagonal(&DVector::from_column_slice(d)),
    }
}

/// Orthonormal basis of `{v : c^T v = 0}` as columns.
fn complement_basis(c: &[f64]) -> DMatrix<f64> {
    let n = c.len();
    let cv = DVector::from_column_slice(c).normalize();
    let proj = DMatrix::identity(n, n) - &cv * cv.transpose();
    let eig = SymmetricEigen::new(proj);
    let mut cols: Vec<usize> = (0..n).collect();
    cols.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    DMatrix::from_fn(n, n - 1, |r, k| eig.eigenvectors[(r, cols[k])])
}

/// Eigenpair number `target` (ascending) of `A v = lambda B v` restricted by
/// `constraint`.
pub(super) fn smallest(
    a: &SparseSymMatrix,
    b: &BOperator<'_>,
    constraint: Constraint<'_>,
    target: usize,
) -> Result<(f64, Vec<f64>)> {
    let n = a.n();
    let z = match constraint {
        Constraint::None => DMatrix::identity(n, n),
        Constraint::Ones => complement_basis(&vec![1.0; n]),
        Constraint::WeightedOnes(d) => complement_basis(d),
    };
    let ar = z.transpose() * a.to_dense() * &z;
    let br = z.transpose() * b_dense(b, n) * &z;
    let br = (&br + br.transpose()) * 0.5;
    let l = br.cholesky().ok_or(Error::DegenerateDenominator)?.l();
    let li = l
        .clone()
        .try_inverse()
        .ok_or(Error::DegenerateDenominator)?;
    let m = &li * ar * li.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(m);
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&p, &q| {
        eig.eigenvalues[p]
            .total_cmp(&eig.eigenvalues[q])
            .then(p.cmp(&q))
    });
    let pick = *idx.get(target).ok_or(Error::DegenerateVector)?;
    let y = eig.eigenvectors.column(pick).into_owned();
    let v = &z * (li.transpose() * y);
    Ok((eig.eigenvalues[pick], v.iter().copied().collect()))
}
