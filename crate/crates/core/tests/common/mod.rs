#![allow(dead_code)]

use cbspart::{Graph, SparseSymMatrix, VertexSet};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::Rng;

/// Random sparse SPD matrix with a non-unit diagonal and smallest
/// eigenvalue of the unscaled part at least `floor`.
pub fn random_spd(n: usize, density: f64, floor: f64, rng: &mut impl Rng) -> SparseSymMatrix {
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            if rng.gen_bool(density) {
                let v = rng.gen_range(-1.0..1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
    }
    let lmin = SymmetricEigen::new(m.clone()).eigenvalues.min();
    for i in 0..n {
        m[(i, i)] += floor - lmin + rng.gen_range(0.0..1.0);
    }
    let d: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
    let scaled = DMatrix::from_fn(n, n, |i, j| d[i] * m[(i, j)] * d[j]);
    SparseSymMatrix::from_dense(&scaled).unwrap()
}

/// Random split of `0..n` into `k` nonempty sets.
pub fn random_split(n: usize, k: usize, rng: &mut impl Rng) -> Vec<VertexSet> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut cuts: Vec<usize> = (1..n).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<usize> = cuts[..k - 1].to_vec();
    cuts.sort_unstable();
    let mut out = Vec::new();
    let mut start = 0;
    for c in cuts.into_iter().chain(std::iter::once(n)) {
        out.push(VertexSet::new(perm[start..c].to_vec()));
        start = c;
    }
    out
}

/// Connected graph: a random spanning tree plus extra random edges.
pub fn random_connected_graph(n: usize, extra: usize, rng: &mut impl Rng) -> Graph {
    let mut edges = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for k in 1..n {
        let p = rng.gen_range(0..k);
        seen.insert((p, k));
        edges.push((p, k, rng.gen_range(0.01..1.0)));
    }
    for _ in 0..extra {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        let key = (i.min(j), i.max(j));
        if i != j && seen.insert(key) {
            edges.push((key.0, key.1, rng.gen_range(0.01..1.0)));
        }
    }
    Graph::from_edges(n, &edges).unwrap()
}

/// Ascending eigenvalues of the dense pencil `(A, B)` with `B` SPD.
pub fn generalized_eigenvalues(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
    let li = b.clone().cholesky().unwrap().l().try_inverse().unwrap();
    let m = &li * a * li.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Adds `beta c c^T` to `a` and `e c c^T` to `b`.
pub fn rank_one_shift(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &[f64],
    beta: f64,
    e: f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let cv = DVector::from_column_slice(c);
    let cc = &cv * cv.transpose();
    (a + &cc * beta, b + &cc * e)
}

/// Dense block-diagonal inverse `P^T B^{-1} P r` for nonoverlapping sets:
/// permute the matrix so each set is contiguous, keep the diagonal blocks,
/// invert, and permute back.
pub fn block_jacobi_apply(a: &SparseSymMatrix, sets: &[VertexSet], r: &[f64]) -> Vec<f64> {
    let order: Vec<usize> = sets.iter().flat_map(|s| s.iter().copied()).collect();
    let n = order.len();
    let dense = a.to_dense();
    let pa = DMatrix::from_fn(n, n, |i, j| dense[(order[i], order[j])]);
    let mut block = DMatrix::<f64>::zeros(n, n);
    let mut start = 0;
    for s in sets {
        for i in start..start + s.len() {
            for j in start..start + s.len() {
                block[(i, j)] = pa[(i, j)];
            }
        }
        start += s.len();
    }
    let pr = DVector::from_iterator(n, order.iter().map(|&v| r[v]));
    let y = block.try_inverse().unwrap() * pr;
    let mut out = vec![0.0; n];
    for (k, &v) in order.iter().enumerate() {
        out[v] = y[k];
    }
    out
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
