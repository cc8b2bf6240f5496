//! CBS constant of a bipartition and its sampled surrogates.
//!
//! The exact constant is a dense computation meant as a reference: for a
//! bipartition `{I, J}` it is the largest singular value of the whitened
//! coupling block `L_I^{-1} A_IJ L_J^{-T}`, where `A_I = L_I L_I^T` and
//! `A_J = L_J L_J^T`. The surrogates `gamma_tilde`, `gamma_bar` and
//! `gamma_hat` average the same two-sided Rayleigh quotient over different
//! sample sets, so each is a lower bound of the exact value.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::laplacian::{bipartition_mask, cut_values, CutValues, DiagonalTerms};
use crate::sparse::{Graph, SparseSymMatrix, VertexSet};

/// Largest dimension accepted by [`cbs_exact`].
pub const DENSE_ORACLE_LIMIT: usize = 2000;

/// A surrogate value plus the conditions under which it was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampledGamma {
    pub value: f64,
    /// No edge crosses the split; the value is defined as 0.
    pub disconnected: bool,
    /// `|I| != |J|`; only meaningful for `gamma_bar`, whose denominator is
    /// generalized to `|I| |J|`.
    pub unbalanced: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CbsReport {
    pub gamma_exact: f64,
    pub gamma_tilde: f64,
    pub gamma_bar: f64,
    pub gamma_hat: f64,
    pub cond_bound: f64,
}

/// Exact CBS constant of `{I, J}` with the default size limit.
pub fn cbs_exact(a: &SparseSymMatrix, i: &VertexSet, j: &VertexSet) -> Result<f64> {
    cbs_exact_with_limit(a, i, j, DENSE_ORACLE_LIMIT)
}

pub fn cbs_exact_with_limit(
    a: &SparseSymMatrix,
    i: &VertexSet,
    j: &VertexSet,
    limit: usize,
) -> Result<f64> {
    let n = a.n();
    if n > limit {
        return Err(Error::TooLargeForDense { n, limit });
    }
    bipartition_mask(n, i, j)?;
    // The constant is symmetric in the two sets; fix the evaluation order so
    // the result is too.
    let (i, j) = if i.min_vertex() <= j.min_vertex() {
        (i, j)
    } else {
        (j, i)
    };
    let block = |rows: &VertexSet, cols: &VertexSet| {
        DMatrix::from_fn(rows.len(), cols.len(), |r, c| {
            a.get(rows.as_slice()[r], cols.as_slice()[c])
        })
    };
    let l_i = cholesky_lower(block(i, i), i)?;
    let l_j = cholesky_lower(block(j, j), j)?;
    let a_ij = block(i, j);
    // X = L_I^{-1} A_IJ, then R^T = L_J^{-1} X^T.
    let x = l_i
        .solve_lower_triangular(&a_ij)
        .ok_or(Error::NotPositiveDefinite {
            column: 0,
            pivot: 0.0,
        })?;
    let rt = l_j
        .solve_lower_triangular(&x.transpose())
        .ok_or(Error::NotPositiveDefinite {
            column: 0,
            pivot: 0.0,
        })?;
    let sv = rt.singular_values();
    Ok(sv.iter().fold(0.0f64, |m, &s| m.max(s)))
}

pub(crate) fn cholesky_lower(m: DMatrix<f64>, set: &VertexSet) -> Result<DMatrix<f64>> {
    match m.clone().cholesky() {
        Some(c) => Ok(c.l()),
        None => {
            // Report the first nonpositive pivot of an unpivoted elimination.
            let n = m.nrows();
            let mut w = m;
            for k in 0..n {
                let p = w[(k, k)];
                if !(p > 0.0) {
                    return Err(Error::NotPositiveDefinite {
                        column: set.as_slice()[k],
                        pivot: p,
                    });
                }
                for r in k + 1..n {
                    let f = w[(r, k)] / p;
                    for c in k + 1..n {
                        w[(r, c)] -= f * w[(k, c)];
                    }
                }
            }
            Err(Error::NotPositiveDefinite {
                column: set.as_slice()[0],
                pivot: 0.0,
            })
        }
    }
}

/// `w(I, J) / cut(I, J)` from precomputed cut statistics.
pub fn gamma_tilde_of(cv: &CutValues) -> SampledGamma {
    SampledGamma {
        value: if cv.cut == 0 {
            0.0
        } else {
            cv.weighted_cut / cv.cut as f64
        },
        disconnected: cv.cut == 0,
        unbalanced: cv.size_i != cv.size_j,
    }
}

/// `w(I, J) / (|I| |J|)`, which equals `(4 / n^2) w(I, J)` for `|I| = |J|`.
pub fn gamma_bar_of(cv: &CutValues) -> SampledGamma {
    SampledGamma {
        value: cv.weighted_cut / (cv.size_i as f64 * cv.size_j as f64),
        disconnected: cv.cut == 0,
        unbalanced: cv.size_i != cv.size_j,
    }
}

/// `(1/n) (w(I,J)/w(J) + w(I,J)/w(I))` from cut statistics of a graph whose
/// weights are the absolute entries of a unit-diagonal matrix.
pub fn gamma_hat_of(cv: &CutValues, diag: DiagonalTerms) -> f64 {
    let n = (cv.size_i + cv.size_j) as f64;
    let (wi, wj) = (cv.w_i(diag), cv.w_j(diag));
    let term = |w: f64| if w > 0.0 { cv.weighted_cut / w } else { 0.0 };
    (term(wj) + term(wi)) / n
}

/// Mean of `|a_ij| / sqrt(a_ii a_jj)` over edges crossing `{I, J}`.
pub fn gamma_tilde(g: &Graph, i: &VertexSet, j: &VertexSet) -> Result<SampledGamma> {
    Ok(gamma_tilde_of(&cut_values(g, i, j)?))
}

/// Mean of the same quantity over all `|I| |J|` index pairs.
pub fn gamma_bar(g: &Graph, i: &VertexSet, j: &VertexSet) -> Result<SampledGamma> {
    Ok(gamma_bar_of(&cut_values(g, i, j)?))
}

/// Min-max cut surrogate evaluated literally on the entries of a
/// diagonally scaled matrix.
pub fn gamma_hat(
    a: &SparseSymMatrix,
    i: &VertexSet,
    j: &VertexSet,
    diag: DiagonalTerms,
) -> Result<f64> {
    for (k, d) in a.diagonal().into_iter().enumerate() {
        if (d - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "gamma_hat needs a unit diagonal, a[{k}][{k}] = {d}"
            )));
        }
    }
    let side = bipartition_mask(a.n(), i, j)?;
    let (mut w_ij, mut w_i, mut w_j) = (0.0, 0.0, 0.0);
    for r in 0..a.n() {
        let (cols, vals) = a.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            if r == c && diag == DiagonalTerms::Exclude {
                continue;
            }
            match (side[r], side[c]) {
                (true, true) => w_i += v.abs(),
                (false, false) => w_j += v.abs(),
                (true, false) => w_ij += v.abs(),
                (false, true) => {}
            }
        }
    }
    let term = |w: f64| if w > 0.0 { w_ij / w } else { 0.0 };
    Ok((term(w_j) + term(w_i)) / a.n() as f64)
}

/// Upper bound `(1 + gamma) / (1 - gamma)` on the condition number of the
/// two-block additive Schwarz preconditioned matrix.
pub fn cond_bound(gamma: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::GammaOutOfRange(gamma));
    }
    Ok((1.0 + gamma) / (1.0 - gamma))
}

/// All metrics for one bipartition of a diagonally scaled matrix.
pub fn cbs_report(a: &SparseSymMatrix, i: &VertexSet, j: &VertexSet) -> Result<CbsReport> {
    let g = crate::laplacian::cbs_weights(a)?;
    let cv = cut_values(&g, i, j)?;
    let gamma_exact = cbs_exact(a, i, j)?;
    let (scaled, _) = a.diag_scale()?;
    Ok(CbsReport {
        gamma_exact,
        gamma_tilde: gamma_tilde_of(&cv).value,
        gamma_bar: gamma_bar_of(&cv).value,
        gamma_hat: gamma_hat(&scaled, i, j, DiagonalTerms::Include)?,
        cond_bound: cond_bound(gamma_exact)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two(g: f64) -> SparseSymMatrix {
        SparseSymMatrix::from_dense(&DMatrix::from_row_slice(2, 2, &[1.0, g, g, 1.0])).unwrap()
    }

    fn set(v: &[usize]) -> VertexSet {
        VertexSet::new(v.to_vec())
    }

    #[test]
    fn exact_on_two_by_two() {
        for g in [0.0, 0.1, -0.3, 0.5, 0.9] {
            let gamma = cbs_exact(&two(g), &set(&[0]), &set(&[1])).unwrap();
            assert!((gamma - g.abs()).abs() < 1e-15);
        }
    }

    #[test]
    fn exact_block_diagonal_is_zero() {
        let a = SparseSymMatrix::from_triangle_triplets(
            4,
            &[
                (0, 0, 2.0),
                (1, 1, 2.0),
                (1, 0, 1.0),
                (2, 2, 3.0),
                (3, 3, 3.0),
                (3, 2, -1.0),
            ],
        )
        .unwrap();
        assert_eq!(cbs_exact(&a, &set(&[0, 1]), &set(&[2, 3])).unwrap(), 0.0);
    }

    #[test]
    fn exact_rejects_non_spd_block() {
        let a = SparseSymMatrix::from_dense(&DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 2.0, 0.0, 2.0, 1.0, 0.1, 0.0, 0.1, 1.0],
        ))
        .unwrap();
        assert!(matches!(
            cbs_exact(&a, &set(&[0, 1]), &set(&[2])),
            Err(Error::NotPositiveDefinite { .. })
        ));
        assert!(matches!(
            cbs_exact_with_limit(&two(0.1), &set(&[0]), &set(&[1]), 1),
            Err(Error::TooLargeForDense { .. })
        ));
    }

    #[test]
    fn tilde_examples() {
        let g = Graph::from_edges(2, &[(0, 1, 0.5)]).unwrap();
        assert_eq!(gamma_tilde(&g, &set(&[0]), &set(&[1])).unwrap().value, 0.5);

        let g = Graph::from_edges(3, &[(0, 1, 0.2), (0, 2, 0.6)]).unwrap();
        let t = gamma_tilde(&g, &set(&[0]), &set(&[1, 2])).unwrap();
        assert!((t.value - 0.4).abs() < 1e-15);

        let a = two(0.5);
        let gw = crate::laplacian::cbs_weights(&a).unwrap();
        let t = gamma_tilde(&gw, &set(&[0]), &set(&[1])).unwrap().value;
        assert_eq!(t, cbs_exact(&a, &set(&[0]), &set(&[1])).unwrap());

        let g = Graph::from_edges(2, &[]).unwrap();
        let t = gamma_tilde(&g, &set(&[0]), &set(&[1])).unwrap();
        assert_eq!(t.value, 0.0);
        assert!(t.disconnected);
    }

    #[test]
    fn bar_examples() {
        let g = Graph::from_edges(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]).unwrap();
        let b = gamma_bar(&g, &set(&[0, 1]), &set(&[2, 3])).unwrap();
        assert_eq!(b.value, 0.25);
        assert!(!b.unbalanced);
        let g0 = Graph::from_edges(4, &[(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert_eq!(
            gamma_bar(&g0, &set(&[0, 1]), &set(&[2, 3])).unwrap().value,
            0.0
        );
        let ub = gamma_bar(&g, &set(&[0]), &set(&[1, 2, 3])).unwrap();
        assert!(ub.unbalanced);
        assert!((ub.value - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn hat_examples() {
        let h = gamma_hat(&two(0.5), &set(&[0]), &set(&[1]), DiagonalTerms::Include).unwrap();
        assert!((h - 0.5).abs() < 1e-15);

        let bd = SparseSymMatrix::from_triangle_triplets(
            4,
            &[
                (0, 0, 1.0),
                (1, 1, 1.0),
                (1, 0, 0.5),
                (2, 2, 1.0),
                (3, 3, 1.0),
            ],
        )
        .unwrap();
        let h = gamma_hat(&bd, &set(&[0, 1]), &set(&[2, 3]), DiagonalTerms::Include).unwrap();
        assert_eq!(h, 0.0);

        // Path of four with off-diagonals 0.5: w(I) = 1 + 1 + 2 * 0.5 = 3,
        // w(J) = 3, w(I,J) = 0.5, so (1/4)(0.5/3 + 0.5/3) = 1/12.
        let mut t = Vec::new();
        for k in 0..4 {
            t.push((k, k, 1.0));
            if k + 1 < 4 {
                t.push((k + 1, k, 0.5));
            }
        }
        let p = SparseSymMatrix::from_triangle_triplets(4, &t).unwrap();
        let h = gamma_hat(&p, &set(&[0, 1]), &set(&[2, 3]), DiagonalTerms::Include).unwrap();
        assert!((h - 1.0 / 12.0).abs() < 1e-15);
        let h = gamma_hat(&p, &set(&[0, 1]), &set(&[2, 3]), DiagonalTerms::Exclude).unwrap();
        assert!((h - 0.25).abs() < 1e-15);

        // Graph route agrees with the literal matrix sums.
        let g = crate::laplacian::cbs_weights(&p).unwrap();
        let cv = cut_values(&g, &set(&[0, 1]), &set(&[2, 3])).unwrap();
        assert!((gamma_hat_of(&cv, DiagonalTerms::Include) - 1.0 / 12.0).abs() < 1e-15);

        assert!(gamma_hat(
            &two(0.5).shifted(1.0),
            &set(&[0]),
            &set(&[1]),
            DiagonalTerms::Include
        )
        .is_err());
    }

    #[test]
    fn cond_bound_examples() {
        assert_eq!(cond_bound(0.0).unwrap(), 1.0);
        assert_eq!(cond_bound(0.5).unwrap(), 3.0);
        assert!(cond_bound(1.0).is_err());
        assert!(cond_bound(-0.1).is_err());
        let mut prev = 0.0;
        for k in 0..100 {
            let b = cond_bound(k as f64 / 100.0).unwrap();
            assert!(b > prev);
            prev = b;
        }
    }

    #[test]
    fn cond_bound_is_attained_on_two_by_two() {
        for g in [0.1, 0.5, 0.9] {
            // T = I, eigenvalues of A are 1 +- g.
            let eig = two(g).to_dense().symmetric_eigenvalues();
            let (lo, hi) = eig
                .iter()
                .fold((f64::MAX, f64::MIN), |(l, h), &e| (l.min(e), h.max(e)));
            assert!((hi / lo - cond_bound(g).unwrap()).abs() < 1e-12);
        }
    }
}
