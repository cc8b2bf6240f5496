//! Coefficient-derived edge weights, graph Laplacians and cut evaluation.

use crate::error::{Error, Result};
use crate::sparse::{Graph, SparseSymMatrix, VertexSet};

/// Edge weights whose relative spread is at most this are treated as uniform.
pub const UNIFORM_WEIGHT_TOLERANCE: f64 = 1e-8;

/// Weights `w_ij = |a_ij| / sqrt(a_ii a_jj)` on the edges of `G(A)`.
///
/// These are the absolute entries of the diagonally scaled matrix, so the
/// result is the same for `A` and `F A F`.
pub fn cbs_weights(a: &SparseSymMatrix) -> Result<Graph> {
    a.check_positive_diagonal()?;
    let d = a.diagonal();
    Ok(Graph::from_matrix(a).with_weights(|i, j| a.get(i, j).abs() / (d[i] * d[j]).sqrt()))
}

/// True when all edge weights coincide up to [`UNIFORM_WEIGHT_TOLERANCE`].
pub fn has_uniform_weights(g: &Graph) -> bool {
    g.weight_spread()
        .map_or(true, |s| s <= UNIFORM_WEIGHT_TOLERANCE)
}

/// Weighted and standard Laplacians of one graph.
#[derive(Debug, Clone)]
pub struct Laplacians {
    /// `L_w = D_w - W`
    pub weighted: SparseSymMatrix,
    /// `L = D - Q`
    pub standard: SparseSymMatrix,
    pub weighted_degree: Vec<f64>,
    pub degree: Vec<f64>,
}

/// Builds `L_w` and `L`. Both share the pattern of `g` plus the diagonal.
pub fn build_laplacians(g: &Graph) -> Result<Laplacians> {
    let n = g.n();
    let mut weighted_degree = vec![0.0; n];
    let mut degree = vec![0.0; n];
    let mut wt = Vec::with_capacity(n + g.num_edges());
    let mut st = Vec::with_capacity(n + g.num_edges());
    for i in 0..n {
        for (j, w) in g.weighted_neighbors(i) {
            if !(w >= 0.0) {
                return Err(Error::NegativeWeight { i, j, weight: w });
            }
            weighted_degree[i] += w;
            degree[i] += 1.0;
            if j < i {
                wt.push((i, j, -w));
                st.push((i, j, -1.0));
            }
        }
        wt.push((i, i, weighted_degree[i]));
        st.push((i, i, degree[i]));
    }
    Ok(Laplacians {
        weighted: SparseSymMatrix::from_triangle_triplets(n, &wt)?,
        standard: SparseSymMatrix::from_triangle_triplets(n, &st)?,
        weighted_degree,
        degree,
    })
}

/// Whether within-set sums include the diagonal entries of the scaled matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiagonalTerms {
    #[default]
    Include,
    Exclude,
}

/// Cut statistics of a bipartition `{I, J}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutValues {
    /// Number of edges crossing the split.
    pub cut: usize,
    /// Sum of crossing edge weights `w(I, J)`.
    pub weighted_cut: f64,
    /// `sum_{k != l in I} w_kl` over ordered pairs (twice the edge sum).
    pub internal_i: f64,
    pub internal_j: f64,
    pub size_i: usize,
    pub size_j: usize,
}

impl CutValues {
    /// `w(I) = sum_{k,l in I} |a_kl|` of the unit-diagonal matrix.
    pub fn w_i(&self, diag: DiagonalTerms) -> f64 {
        self.internal_i + diag_term(diag, self.size_i)
    }

    pub fn w_j(&self, diag: DiagonalTerms) -> f64 {
        self.internal_j + diag_term(diag, self.size_j)
    }
}

fn diag_term(diag: DiagonalTerms, size: usize) -> f64 {
    match diag {
        DiagonalTerms::Include => size as f64,
        DiagonalTerms::Exclude => 0.0,
    }
}

/// Validates `{I, J}` as a bipartition of `0..n` and returns the side of each
/// vertex (`true` for `I`).
pub(crate) fn bipartition_mask(n: usize, i: &VertexSet, j: &VertexSet) -> Result<Vec<bool>> {
    if i.is_empty() || j.is_empty() {
        return Err(Error::InvalidBipartition("both sides must be nonempty"));
    }
    if i.len() + j.len() != n {
        return Err(Error::InvalidBipartition(
            "sets do not cover the vertex set",
        ));
    }
    let mut side = vec![None; n];
    for &v in i {
        if v >= n {
            return Err(Error::IndexOutOfRange { index: v, n });
        }
        side[v] = Some(true);
    }
    for &v in j {
        if v >= n {
            return Err(Error::IndexOutOfRange { index: v, n });
        }
        if side[v].is_some() {
            return Err(Error::InvalidBipartition("sets overlap"));
        }
        side[v] = Some(false);
    }
    side.into_iter()
        .map(|s| {
            s.ok_or(Error::InvalidBipartition(
                "sets do not cover the vertex set",
            ))
        })
        .collect()
}

/// Evaluates `cut(I, J)`, `w(I, J)` and the within-set weight sums.
pub fn cut_values(g: &Graph, i: &VertexSet, j: &VertexSet) -> Result<CutValues> {
    let side = bipartition_mask(g.n(), i, j)?;
    Ok(cut_values_from_mask(g, &side))
}

pub(crate) fn cut_values_from_mask(g: &Graph, in_i: &[bool]) -> CutValues {
    let mut cv = CutValues {
        cut: 0,
        weighted_cut: 0.0,
        internal_i: 0.0,
        internal_j: 0.0,
        size_i: in_i.iter().filter(|&&b| b).count(),
        size_j: in_i.iter().filter(|&&b| !b).count(),
    };
    for u in 0..g.n() {
        for (x, w) in g.weighted_neighbors(u) {
            match (in_i[u], in_i[x]) {
                (true, true) => cv.internal_i += w,
                (false, false) => cv.internal_j += w,
                (true, false) => {
                    cv.cut += 1;
                    cv.weighted_cut += w;
                }
                (false, true) => {}
            }
        }
    }
    cv
}

/// Indicator vector `p` with `p_k = 1` on `I` and `-1` on `J`.
pub fn indicator_vector(n: usize, i: &VertexSet, j: &VertexSet) -> Result<Vec<f64>> {
    let side = bipartition_mask(n, i, j)?;
    Ok(side.iter().map(|&s| if s { 1.0 } else { -1.0 }).collect())
}
