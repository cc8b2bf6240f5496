//! Sweep over threshold splits of a sorted eigenvector.

use serde::{Deserialize, Serialize};

use super::Method;
use crate::cbs::{gamma_bar_of, gamma_hat_of, gamma_tilde_of};
use crate::error::{Error, Result};
use crate::laplacian::{CutValues, DiagonalTerms};
use crate::sparse::{Graph, VertexSet};

/// One evaluated candidate split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub size_i: usize,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bipartition {
    pub i: VertexSet,
    pub j: VertexSet,
    pub objective: f64,
    pub cut: CutSummary,
    pub candidates: Vec<Candidate>,
    pub chosen: usize,
}

/// Surrogate values of a split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutSummary {
    pub cut: usize,
    pub weighted_cut: f64,
    pub gamma_tilde: f64,
    pub gamma_bar: f64,
    pub gamma_hat: f64,
}

impl From<&CutValues> for CutSummary {
    fn from(cv: &CutValues) -> Self {
        CutSummary {
            cut: cv.cut,
            weighted_cut: cv.weighted_cut,
            gamma_tilde: gamma_tilde_of(cv).value,
            gamma_bar: gamma_bar_of(cv).value,
            gamma_hat: gamma_hat_of(cv, DiagonalTerms::Include),
        }
    }
}

/// Number of indices forced onto each side: the smallest `m` with
/// `m / (n - m) >= load_balance`, capped at `n / 2` and at least 1.
pub fn forced_count(n: usize, load_balance: f64) -> usize {
    let m = (load_balance * n as f64 / (1.0 + load_balance)).ceil() as usize;
    m.min(n / 2).max(1)
}

/// Sizes of `I` for the candidate splits: centers of `l` equal bins over
/// the free middle segment, or `m` alone when nothing is free.
pub fn candidate_sizes(n: usize, m: usize, l: usize) -> Vec<usize> {
    let free = n - 2 * m;
    if free == 0 {
        return vec![m];
    }
    let l = l.clamp(1, free);
    let mut out: Vec<usize> = (1..=l).map(|k| m + (2 * k - 1) * free / (2 * l)).collect();
    out.dedup();
    out
}

pub(crate) fn objective_of(method: Method, cv: &CutValues) -> f64 {
    match method {
        Method::Cbs => gamma_tilde_of(cv).value,
        Method::Rsb => cv.cut as f64,
        Method::MinCut => gamma_bar_of(cv).value,
        Method::Mcut => gamma_hat_of(cv, DiagonalTerms::Include),
    }
}

/// Chooses the candidate threshold split of `v` minimizing the objective of
/// `method` on the weighted graph `g`.
///
/// Vertices are ordered by `(v_i, i)`. The first `m` go to `I`, the last `m`
/// to `J`, and the middle is swept. Ties in the objective go to the more
/// balanced split, then to the smaller `I`.
pub fn split_from_vector(
    v: &[f64],
    g: &Graph,
    load_balance: f64,
    l: usize,
    method: Method,
) -> Result<Bipartition> {
    let n = g.n();
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: v.len(),
        });
    }
    if n < 2 {
        return Err(Error::InvalidBipartition("need at least two vertices"));
    }
    if l == 0 {
        return Err(Error::InvalidConfig(
            "candidate count must be at least 1".into(),
        ));
    }
    if !(load_balance > 0.0 && load_balance <= 1.0) {
        return Err(Error::InvalidConfig(
            "load balance must lie in (0, 1]".into(),
        ));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateVector);
    }
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        });
    if lo == hi {
        return Err(Error::DegenerateVector);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]).then(a.cmp(&b)));

    let m = forced_count(n, load_balance);
    let sizes = candidate_sizes(n, m, l);

    let mut in_i = vec![false; n];
    let mut cv = CutValues {
        cut: 0,
        weighted_cut: 0.0,
        internal_i: 0.0,
        internal_j: 0.0,
        size_i: 0,
        size_j: n,
    };
    for u in 0..n {
        for (_, w) in g.weighted_neighbors(u) {
            cv.internal_j += w;
        }
    }

    let mut candidates = Vec::with_capacity(sizes.len());
    let mut best: Option<(usize, f64, usize)> = None;
    let mut moved = 0;
    for &size in &sizes {
        while moved < size {
            let u = order[moved];
            for (x, w) in g.weighted_neighbors(u) {
                if in_i[x] {
                    cv.cut -= 1;
                    cv.weighted_cut -= w;
                    cv.internal_i += 2.0 * w;
                } else {
                    cv.cut += 1;
                    cv.weighted_cut += w;
                    cv.internal_j -= 2.0 * w;
                }
            }
            in_i[u] = true;
            cv.size_i += 1;
            cv.size_j -= 1;
            moved += 1;
        }
        let obj = objective_of(method, &cv);
        let balance = size.min(n - size);
        let idx = candidates.len();
        candidates.push(Candidate {
            size_i: size,
            objective: obj,
        });
        let better = match best {
            None => true,
            Some((_, b_obj, b_bal)) => obj < b_obj || (obj == b_obj && balance > b_bal),
        };
        if better {
            best = Some((idx, obj, balance));
        }
    }
    let (chosen, objective, _) = best.expect("at least one candidate");
    let size = candidates[chosen].size_i;
    let i = VertexSet::new(order[..size].to_vec());
    let j = VertexSet::new(order[size..].to_vec());
    let side = i.membership(n);
    let cut = CutSummary::from(&crate::laplacian::cut_values_from_mask(g, &side));
    Ok(Bipartition {
        i,
        j,
        objective,
        cut,
        candidates,
        chosen,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laplacian::cut_values;

    fn path(n: usize) -> Graph {
        let e: Vec<_> = (0..n - 1).map(|k| (k, k + 1, 1.0)).collect();
        Graph::from_edges(n, &e).unwrap()
    }

    #[test]
    fn full_balance_is_forced() {
        let b = split_from_vector(&[-2.0, -1.0, 1.0, 2.0], &path(4), 1.0, 32, Method::Cbs).unwrap();
        assert_eq!(b.i.as_slice(), &[0, 1]);
        assert_eq!(b.j.as_slice(), &[2, 3]);
        assert_eq!(b.candidates.len(), 1);
    }

    #[test]
    fn single_candidate_splits_at_midpoint() {
        let v = [0.3, -0.2, 0.9, -0.7, 0.1, 0.5];
        let b = split_from_vector(&v, &path(6), 1e-9, 1, Method::Rsb).unwrap();
        assert_eq!(b.candidates.len(), 1);
        assert_eq!(b.i.len(), 3);
        assert_eq!(b.i.as_slice(), &[1, 3, 4]);
    }

    #[test]
    fn constant_vector_is_degenerate() {
        assert_eq!(
            split_from_vector(&[1.0; 5], &path(5), 0.8, 4, Method::Cbs),
            Err(Error::DegenerateVector)
        );
    }

    #[test]
    fn forced_count_examples() {
        assert_eq!(forced_count(400, 0.8), 178);
        assert_eq!(forced_count(4, 1.0), 2);
        assert_eq!(forced_count(5, 1.0), 2);
        assert_eq!(forced_count(10, 1e-9), 1);
    }

    #[test]
    fn candidate_sizes_cover_free_segment() {
        assert_eq!(candidate_sizes(10, 2, 100), vec![2, 3, 4, 5, 6, 7]);
        assert_eq!(candidate_sizes(10, 2, 1), vec![5]);
        assert_eq!(candidate_sizes(4, 2, 8), vec![2]);
    }

    #[test]
    fn incremental_sweep_matches_direct_evaluation() {
        let e = [
            (0, 1, 0.2),
            (1, 2, 0.9),
            (2, 3, 0.1),
            (3, 4, 0.7),
            (0, 4, 0.3),
            (1, 3, 0.5),
        ];
        let g = Graph::from_edges(5, &e).unwrap();
        let v = [0.4, -0.1, 0.3, -0.5, 0.2];
        for method in [Method::Cbs, Method::Rsb, Method::MinCut, Method::Mcut] {
            let b = split_from_vector(&v, &g, 0.25, 8, method).unwrap();
            let mut order: Vec<usize> = (0..5).collect();
            order.sort_by(|&a, &c| v[a].total_cmp(&v[c]));
            for c in &b.candidates {
                let i = VertexSet::new(order[..c.size_i].to_vec());
                let j = VertexSet::new(order[c.size_i..].to_vec());
                let cv = cut_values(&g, &i, &j).unwrap();
                assert!((objective_of(method, &cv) - c.objective).abs() < 1e-12);
                assert!(b.objective <= c.objective);
            }
        }
    }
}
