//! Sparse Cholesky factorization: exact (with reverse Cuthill-McKee ordering)
//! and incomplete with threshold dropping.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::sparse::SparseSymMatrix;

/// Lower-triangular factor stored by columns; the diagonal is the first
/// entry of each column.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CholeskyFactor {
    /// Left-looking column factorization of `a`. An off-diagonal `l_ij` is
    /// dropped when `|l_ij| < droptol * ||a_j||_2`, with `a_j` the j-th row of
    /// `a`; `droptol = 0` gives the exact factor.
    pub fn new(a: &SparseSymMatrix, droptol: f64) -> Result<Self> {
        let n = a.n();
        let mut cols: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
        let mut row_cols: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut next: Vec<usize> = vec![0; n];
        let mut work = vec![0.0; n];
        let mut mark = vec![false; n];
        let mut touched: Vec<usize> = Vec::new();

        for j in 0..n {
            let (acols, avals) = a.row(j);
            let row_norm = avals.iter().map(|v| v * v).sum::<f64>().sqrt();
            for (&i, &v) in acols.iter().zip(avals) {
                if i >= j {
                    work[i] = v;
                    if !mark[i] {
                        mark[i] = true;
                        touched.push(i);
                    }
                }
            }
            if !mark[j] {
                mark[j] = true;
                touched.push(j);
            }
            for &k in &row_cols[j] {
                let col = &cols[k];
                let p0 = next[k];
                debug_assert_eq!(col[p0].0, j);
                let ljk = col[p0].1;
                for &(i, lik) in &col[p0..] {
                    work[i] -= lik * ljk;
                    if !mark[i] {
                        mark[i] = true;
                        touched.push(i);
                    }
                }
                next[k] = p0 + 1;
            }
            let d = work[j];
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite {
                    column: j,
                    pivot: d,
                });
            }
            let ljj = d.sqrt();
            touched.sort_unstable();
            let thresh = droptol * row_norm;
            let mut col = Vec::with_capacity(touched.len());
            col.push((j, ljj));
            for &i in &touched {
                if i > j {
                    let v = work[i] / ljj;
                    if v != 0.0 && v.abs() >= thresh {
                        col.push((i, v));
                        row_cols[i].push(j);
                    }
                }
                work[i] = 0.0;
                mark[i] = false;
            }
            touched.clear();
            next[j] = 1;
            cols.push(col);
        }

        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for col in cols {
            for (i, v) in col {
                row_idx.push(i);
                values.push(v);
            }
            col_ptr.push(row_idx.len());
        }
        Ok(CholeskyFactor {
            n,
            col_ptr,
            row_idx,
            values,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Solves `L L^T x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        for j in 0..self.n {
            let (s, e) = (self.col_ptr[j], self.col_ptr[j + 1]);
            let xj = x[j] / self.values[s];
            x[j] = xj;
            for p in s + 1..e {
                x[self.row_idx[p]] -= self.values[p] * xj;
            }
        }
        for j in (0..self.n).rev() {
            let (s, e) = (self.col_ptr[j], self.col_ptr[j + 1]);
            let mut acc = x[j];
            for p in s + 1..e {
                acc -= self.values[p] * x[self.row_idx[p]];
            }
            x[j] = acc / self.values[s];
        }
    }
}

/// Reverse Cuthill-McKee ordering; `order[k]` is the original index placed
/// at position `k`.
pub fn rcm_ordering(a: &SparseSymMatrix) -> Vec<usize> {
    let n = a.n();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).0.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));

    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(a, seed, &degree);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut nbrs = Vec::new();
        while let Some(u) = queue.pop_front() {
            order.push(u);
            nbrs.clear();
            nbrs.extend(a.row(u).0.iter().copied().filter(|&x| !visited[x]));
            nbrs.sort_by_key(|&x| (degree[x], x));
            for &x in &nbrs {
                visited[x] = true;
                queue.push_back(x);
            }
        }
    }
    order.reverse();
    order
}

fn pseudo_peripheral(a: &SparseSymMatrix, seed: usize, degree: &[usize]) -> usize {
    let mut start = seed;
    let mut ecc = 0;
    for _ in 0..8 {
        let levels = bfs_levels(a, start);
        let depth = *levels.iter().filter_map(|l| l.as_ref()).max().unwrap_or(&0);
        if depth <= ecc && ecc > 0 {
            break;
        }
        ecc = depth;
        let far = levels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == Some(depth))
            .map(|(i, _)| i)
            .min_by_key(|&i| (degree[i], i));
        match far {
            Some(f) if f != start => start = f,
            _ => break,
        }
    }
    start
}

fn bfs_levels(a: &SparseSymMatrix, start: usize) -> Vec<Option<usize>> {
    let mut level = vec![None; a.n()];
    level[start] = Some(0);
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        let lu = level[u].unwrap_or(0);
        for &x in a.row(u).0 {
            if level[x].is_none() {
                level[x] = Some(lu + 1);
                queue.push_back(x);
            }
        }
    }
    level
}

/// Exact sparse Cholesky solver with a fill-reducing symmetric ordering.
#[derive(Debug, Clone)]
pub struct SparseCholesky {
    order: Vec<usize>,
    factor: CholeskyFactor,
}

impl SparseCholesky {
    pub fn new(a: &SparseSymMatrix) -> Result<Self> {
        let order = rcm_ordering(a);
        let mut perm = vec![0; a.n()];
        for (k, &old) in order.iter().enumerate() {
            perm[old] = k;
        }
        let pa = a.symmetric_permute(&perm)?;
        let factor = CholeskyFactor::new(&pa, 0.0).map_err(|e| match e {
            Error::NotPositiveDefinite { column, pivot } => Error::NotPositiveDefinite {
                column: order[column],
                pivot,
            },
            other => other,
        })?;
        Ok(SparseCholesky { order, factor })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = self.order.iter().map(|&old| b[old]).collect();
        self.factor.solve_in_place(&mut y);
        let mut x = vec![0.0; b.len()];
        for (k, &old) in self.order.iter().enumerate() {
            x[old] = y[k];
        }
        x
    }

    pub fn factor_nnz(&self) -> usize {
        self.factor.nnz()
    }
}

/// Number of shift increases tried after the first incomplete factorization
/// breaks down.
pub const IC_RETRIES: usize = 3;

/// Applies `(L L^T)^{-1}` for a threshold incomplete Cholesky factor `L` of
/// `M + sigma I`.
#[derive(Debug, Clone)]
pub struct IcPreconditioner {
    factor: CholeskyFactor,
    sigma: f64,
}

impl IcPreconditioner {
    /// Factors `M + sigma I`; on breakdown the shift is multiplied by 10 and
    /// the factorization retried up to [`IC_RETRIES`] times.
    pub fn new(m: &SparseSymMatrix, droptol: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "IC shift must be positive, got {sigma}"
            )));
        }
        if !(droptol >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "drop tolerance must be >= 0, got {droptol}"
            )));
        }
        let mut s = sigma;
        for attempt in 0..=IC_RETRIES {
            match CholeskyFactor::new(&m.shifted(s), droptol) {
                Ok(factor) => return Ok(IcPreconditioner { factor, sigma: s }),
                Err(Error::NotPositiveDefinite { .. }) if attempt < IC_RETRIES => s *= 10.0,
                Err(Error::NotPositiveDefinite { .. }) => {
                    return Err(Error::IcBreakdown {
                        attempts: IC_RETRIES + 1,
                        sigma: s,
                    })
                }
                Err(e) => return Err(e),
            }
        }
        unreachable!()
    }

    /// Shift actually used after any breakdown retries.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        let mut z = r.to_vec();
        self.factor.solve_in_place(&mut z);
        z
    }

    pub fn apply_in_place(&self, r: &mut [f64]) {
        self.factor.solve_in_place(r);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laplacian::build_laplacians;
    use crate::sparse::Graph;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, density: f64, seed: u64) -> SparseSymMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        let mut rowsum = vec![0.0; n];
        for i in 0..n {
            for j in 0..i {
                if rng.gen::<f64>() < density {
                    let v: f64 = rng.gen_range(-1.0..1.0);
                    t.push((i, j, v));
                    rowsum[i] += v.abs();
                    rowsum[j] += v.abs();
                }
            }
        }
        for (i, s) in rowsum.iter().enumerate() {
            t.push((i, i, s + 0.5));
        }
        SparseSymMatrix::from_triangle_triplets(n, &t).unwrap()
    }

    fn path_laplacian(n: usize) -> SparseSymMatrix {
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
        build_laplacians(&Graph::from_edges(n, &edges).unwrap())
            .unwrap()
            .standard
    }

    #[test]
    fn exact_factor_reproduces_matrix() {
        let a = random_spd(30, 0.2, 1);
        let f = CholeskyFactor::new(&a, 0.0).unwrap();
        let mut l = DMatrix::zeros(30, 30);
        for j in 0..30 {
            for p in f.col_ptr[j]..f.col_ptr[j + 1] {
                l[(f.row_idx[p], j)] = f.values[p];
            }
        }
        let diff = (&l * l.transpose() - a.to_dense()).abs().max();
        assert!(diff < 1e-12, "{diff}");
    }

    #[test]
    fn sparse_cholesky_solves() {
        let a = random_spd(80, 0.05, 7);
        let chol = SparseCholesky::new(&a).unwrap();
        let x_true: Vec<f64> = (0..80).map(|i| (i as f64).sin()).collect();
        let b = a.mul_vec(&x_true);
        let x = chol.solve(&b);
        let err = x
            .iter()
            .zip(&x_true)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn sparse_cholesky_reports_indefinite() {
        let a = SparseSymMatrix::from_dense(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]))
            .unwrap();
        assert!(matches!(
            SparseCholesky::new(&a),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn rcm_is_a_permutation_and_reduces_bandwidth() {
        // Path numbered in a scrambled order.
        let n = 50;
        let scramble: Vec<usize> = (0..n).map(|i| (i * 17) % n).collect();
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
        }
        for k in 0..n - 1 {
            let (a, b) = (scramble[k], scramble[k + 1]);
            t.push((a.max(b), a.min(b), -1.0));
        }
        let a = SparseSymMatrix::from_triangle_triplets(n, &t).unwrap();
        let order = rcm_ordering(&a);
        let mut seen = order.clone();
        seen.sort_unstable();
        assert_eq!(seen, (0..n).collect::<Vec<_>>());
        let mut pos = vec![0; n];
        for (k, &o) in order.iter().enumerate() {
            pos[o] = k;
        }
        let bw = (0..n)
            .flat_map(|i| a.row(i).0.iter().map(move |&j| (i, j)))
            .map(|(i, j)| pos[i].abs_diff(pos[j]))
            .max()
            .unwrap();
        assert_eq!(bw, 1);
    }

    #[test]
    fn ic_of_zero_matrix_is_scaled_identity() {
        let zero = SparseSymMatrix::from_triangle_triplets(4, &[]).unwrap();
        let ic = IcPreconditioner::new(&zero, 1e-3, 0.1).unwrap();
        let z = ic.apply(&[1.0, 2.0, 3.0, 4.0]);
        for (k, v) in z.iter().enumerate() {
            assert!((v - 10.0 * (k + 1) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn ic_without_dropping_is_exact() {
        let a = random_spd(40, 0.15, 3);
        let ic = IcPreconditioner::new(&a, 0.0, 0.1).unwrap();
        let shifted = a.shifted(0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: Vec<f64> = (0..40).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let z = ic.apply(&shifted.mul_vec(&x));
        let err = z
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn ic_on_path_laplacian_is_close_to_direct_solve() {
        let m = path_laplacian(10);
        let ic = IcPreconditioner::new(&m, 1e-3, 0.1).unwrap();
        let shifted = m.shifted(0.1);
        let x: Vec<f64> = (0..10).map(|i| 1.0 + (i as f64) * 0.3).collect();
        let z = ic.apply(&shifted.mul_vec(&x));
        // Direct dense solve as the reference.
        let dense = shifted.to_dense();
        let direct = dense
            .lu()
            .solve(&DVector::from_vec(shifted.mul_vec(&x)))
            .unwrap();
        let num: f64 = z
            .iter()
            .zip(direct.iter())
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        let den: f64 = direct.iter().map(|b| b * b).sum();
        assert!((num / den).sqrt() < 0.1);
    }

    #[test]
    fn ic_retries_with_larger_shift() {
        // Indefinite by -0.5: sigma 0.1 fails, sigma 1.0 succeeds.
        let m = SparseSymMatrix::from_diagonal(&[1.0, -0.5, 1.0]);
        let ic = IcPreconditioner::new(&m, 1e-3, 0.1).unwrap();
        assert_eq!(ic.sigma(), 1.0);
        let hopeless = SparseSymMatrix::from_diagonal(&[1.0, -1e6]);
        assert!(matches!(
            IcPreconditioner::new(&hopeless, 1e-3, 0.1),
            Err(Error::IcBreakdown { attempts: 4, .. })
        ));
        assert!(IcPreconditioner::new(&m, 1e-3, 0.0).is_err());
    }
}
