use nalgebra::DMatrix;

use super::VertexSet;
use crate::error::{Error, Result};

/// Relative asymmetry below which input is symmetrized instead of rejected.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Symmetric sparse matrix in compressed-row form.
///
/// Both triangles are stored explicitly and column indices are strictly
/// increasing within each row. Explicit off-diagonal zeros are dropped, so the
/// stored off-diagonal pattern is the edge set of the adjacency graph.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymMatrix {
    /// Builds a matrix from `(row, col, value)` triplets that describe both
    /// triangles. Duplicates are summed. Pairs that disagree by more than
    /// [`SYMMETRY_TOLERANCE`] relative to the largest entry are rejected;
    /// smaller discrepancies are averaged away.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            check_index(i, n)?;
            check_index(j, n)?;
            if !v.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
            rows[i].push((j, v));
        }
        let raw = Self::from_row_lists(n, rows, false);
        raw.symmetrized()
    }

    /// Builds a symmetric matrix from triplets of one triangle. An entry
    /// `(i, j)` also defines `(j, i)`; duplicates of the same unordered pair
    /// are summed.
    pub fn from_triangle_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            check_index(i, n)?;
            check_index(j, n)?;
            if !v.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
            rows[i].push((j, v));
            if i != j {
                rows[j].push((i, v));
            }
        }
        Ok(Self::from_row_lists(n, rows, true))
    }

    fn from_row_lists(n: usize, mut rows: Vec<Vec<(usize, f64)>>, drop_zeros: bool) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for (i, row) in rows.iter_mut().enumerate() {
            row.sort_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut v = 0.0;
                while k < row.len() && row[k].0 == j {
                    v += row[k].1;
                    k += 1;
                }
                if drop_zeros && v == 0.0 && i != j {
                    continue;
                }
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        SparseSymMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    fn symmetrized(self) -> Result<Self> {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = SYMMETRY_TOLERANCE * scale;
        let mut triplets = Vec::with_capacity(self.values.len());
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let t = self.get(j, i);
                let diff = (v - t).abs();
                if diff > tol {
                    return Err(Error::NotSymmetric {
                        row: i,
                        col: j,
                        diff,
                    });
                }
                if j <= i {
                    triplets.push((i, j, 0.5 * (v + t)));
                }
            }
        }
        Ok(Self::from_triangle_lower(self.n, triplets))
    }

    fn from_triangle_lower(n: usize, lower: Vec<(usize, usize, f64)>) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, j, v) in lower {
            rows[i].push((j, v));
            if i != j {
                rows[j].push((i, v));
            }
        }
        Self::from_row_lists(n, rows, true)
    }

    pub fn identity(n: usize) -> Self {
        SparseSymMatrix {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        SparseSymMatrix {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    /// Converts a dense symmetric matrix, rejecting asymmetric input.
    pub fn from_dense(m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let n = m.nrows();
        let mut triplets = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = m[(i, j)];
                if v != 0.0 || i == j {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n, &triplets)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                m[(i, j)] = v;
            }
        }
        m
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored entries (both triangles).
    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[s..e], &self.values[s..e])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Checks that every diagonal entry is stored and strictly positive.
    pub fn check_positive_diagonal(&self) -> Result<()> {
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            match cols.binary_search(&i) {
                Ok(k) if vals[k] > 0.0 => {}
                Ok(k) => {
                    return Err(Error::NonPositiveDiagonal {
                        index: i,
                        value: vals[k],
                    })
                }
                Err(_) => return Err(Error::MissingDiagonal(i)),
            }
        }
        Ok(())
    }

    /// `y = A x`
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut acc = 0.0;
            for k in s..e {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    /// Quadratic form `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let ax = self.mul_vec(x);
        ax.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Returns `F A F` with `F = diag(1/sqrt(a_ii))` together with the
    /// diagonal of `F`, so that `x = F y` maps solutions back.
    pub fn diag_scale(&self) -> Result<(SparseSymMatrix, Vec<f64>)> {
        self.check_positive_diagonal()?;
        let f: Vec<f64> = self.diagonal().iter().map(|d| 1.0 / d.sqrt()).collect();
        let mut scaled = self.clone();
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                scaled.values[k] = if i == j {
                    1.0
                } else {
                    self.values[k] * f[i] * f[j]
                };
            }
        }
        Ok((scaled, f))
    }

    /// Principal submatrix `A(V_k, V_k)` in the local numbering of `set`.
    pub fn submatrix(&self, set: &VertexSet) -> Result<SparseSymMatrix> {
        if set.is_empty() {
            return Err(Error::EmptySet);
        }
        let local = set.local_index_map(self.n)?;
        let mut row_ptr = Vec::with_capacity(set.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for &g in set.iter() {
            let (cols, vals) = self.row(g);
            for (&j, &v) in cols.iter().zip(vals) {
                if let Some(lj) = local[j] {
                    col_idx.push(lj);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(SparseSymMatrix {
            n: set.len(),
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Returns `C` with `c[perm[i]][perm[j]] = a[i][j]`.
    pub fn symmetric_permute(&self, perm: &[usize]) -> Result<SparseSymMatrix> {
        let n = self.n;
        if perm.len() != n {
            return Err(Error::InvalidPermutation(n));
        }
        let mut inv = vec![usize::MAX; n];
        for (i, &p) in perm.iter().enumerate() {
            if p >= n || inv[p] != usize::MAX {
                return Err(Error::InvalidPermutation(n));
            }
            inv[p] = i;
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        row_ptr.push(0);
        let mut buf: Vec<(usize, f64)> = Vec::new();
        for new_i in 0..n {
            let old_i = inv[new_i];
            let (cols, vals) = self.row(old_i);
            buf.clear();
            buf.extend(cols.iter().zip(vals).map(|(&j, &v)| (perm[j], v)));
            buf.sort_by_key(|&(j, _)| j);
            for &(j, v) in &buf {
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(SparseSymMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Returns `self + shift * I`.
    pub fn shifted(&self, shift: f64) -> SparseSymMatrix {
        let mut rows: Vec<Vec<(usize, f64)>> = (0..self.n)
            .map(|i| {
                let (c, v) = self.row(i);
                c.iter().copied().zip(v.iter().copied()).collect()
            })
            .collect();
        for (i, row) in rows.iter_mut().enumerate() {
            row.push((i, shift));
        }
        Self::from_row_lists(self.n, rows, false)
    }
}

fn check_index(i: usize, n: usize) -> Result<()> {
    if i >= n {
        Err(Error::IndexOutOfRange { index: i, n })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> SparseSymMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i + 1, i, -1.0));
            }
        }
        SparseSymMatrix::from_triangle_triplets(n, &t).unwrap()
    }

    #[test]
    fn diag_scale_two_by_two() {
        let a = SparseSymMatrix::from_dense(&DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 4.0]))
            .unwrap();
        let (s, f) = a.diag_scale().unwrap();
        assert_eq!(f, vec![0.5, 0.5]);
        assert_eq!(
            s.to_dense(),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0])
        );
    }

    #[test]
    fn diag_scale_identity_and_tridiagonal() {
        let (s, _) = SparseSymMatrix::identity(5).diag_scale().unwrap();
        assert_eq!(s, SparseSymMatrix::identity(5));

        let (s, _) = tridiag(3).diag_scale().unwrap();
        let d = s.to_dense();
        for i in 0..3 {
            assert_eq!(d[(i, i)], 1.0);
        }
        assert!((d[(0, 1)] + 0.5).abs() < 1e-15);
        assert!((d[(1, 2)] + 0.5).abs() < 1e-15);
        assert_eq!(d[(0, 2)], 0.0);
    }

    #[test]
    fn diag_scale_rejects_nonpositive() {
        let a = SparseSymMatrix::from_triangle_triplets(2, &[(0, 0, 1.0), (1, 1, -2.0)]).unwrap();
        assert_eq!(
            a.diag_scale().unwrap_err(),
            Error::NonPositiveDiagonal {
                index: 1,
                value: -2.0
            }
        );
        let b = SparseSymMatrix::from_triangle_triplets(2, &[(0, 0, 1.0)]).unwrap();
        assert_eq!(b.diag_scale().unwrap_err(), Error::MissingDiagonal(1));
    }

    #[test]
    fn submatrix_examples() {
        let a = tridiag(3);
        let s = a.submatrix(&VertexSet::new(vec![0, 2])).unwrap();
        assert_eq!(
            s.to_dense(),
            DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0])
        );
        assert_eq!(a.submatrix(&VertexSet::full(3)).unwrap(), a);
        let (scaled, _) = a.diag_scale().unwrap();
        let one = scaled.submatrix(&VertexSet::new(vec![1])).unwrap();
        assert_eq!(one.to_dense(), DMatrix::from_element(1, 1, 1.0));
        assert_eq!(
            a.submatrix(&VertexSet::new(vec![])).unwrap_err(),
            Error::EmptySet
        );
        assert!(matches!(
            a.submatrix(&VertexSet::new(vec![5])),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn permute_examples() {
        let a = tridiag(3);
        assert_eq!(a.symmetric_permute(&[0, 1, 2]).unwrap(), a);
        let two =
            SparseSymMatrix::from_dense(&DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]))
                .unwrap();
        assert_eq!(two.symmetric_permute(&[1, 0]).unwrap(), two);

        let c = a.symmetric_permute(&[2, 0, 1]).unwrap().to_dense();
        let d = a.to_dense();
        let perm = [2, 0, 1];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(c[(perm[i], perm[j])], d[(i, j)]);
            }
        }
        let mut ea: Vec<f64> = d.symmetric_eigenvalues().iter().copied().collect();
        let mut ec: Vec<f64> = c.symmetric_eigenvalues().iter().copied().collect();
        ea.sort_by(f64::total_cmp);
        ec.sort_by(f64::total_cmp);
        for (x, y) in ea.iter().zip(&ec) {
            assert!((x - y).abs() < 1e-12);
        }
        assert_eq!(
            a.symmetric_permute(&[0, 0, 1]).unwrap_err(),
            Error::InvalidPermutation(3)
        );
        assert!(a.symmetric_permute(&[0, 1]).is_err());
    }

    #[test]
    fn ingestion_symmetrizes_tiny_asymmetry_and_rejects_large() {
        let ok = SparseSymMatrix::from_triplets(
            2,
            &[(0, 0, 1.0), (1, 1, 1.0), (0, 1, 0.5), (1, 0, 0.5 + 1e-14)],
        )
        .unwrap();
        assert_eq!(ok.get(0, 1), ok.get(1, 0));
        let bad = SparseSymMatrix::from_triplets(
            2,
            &[(0, 0, 1.0), (1, 1, 1.0), (0, 1, 0.5), (1, 0, 0.4)],
        );
        assert!(matches!(bad, Err(Error::NotSymmetric { .. })));
        let missing = SparseSymMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 1, 1.0), (0, 1, 0.5)]);
        assert!(matches!(missing, Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn columns_strictly_increasing_and_zeros_dropped() {
        let a = SparseSymMatrix::from_triangle_triplets(
            3,
            &[
                (2, 0, 1.0),
                (0, 0, 3.0),
                (1, 1, 3.0),
                (2, 2, 3.0),
                (1, 0, 0.0),
                (2, 0, 1.0),
            ],
        )
        .unwrap();
        for i in 0..3 {
            let (c, _) = a.row(i);
            assert!(c.windows(2).all(|w| w[0] < w[1]));
        }
        assert_eq!(a.get(2, 0), 2.0);
        assert_eq!(a.get(1, 0), 0.0);
        assert_eq!(a.nnz(), 5);
    }
}
