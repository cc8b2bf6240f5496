use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::SparseSymMatrix;
use crate::error::{Error, Result};

/// Sorted, duplicate-free list of vertex indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexSet(Vec<usize>);

impl VertexSet {
    /// Sorts and deduplicates the given indices.
    pub fn new(mut v: Vec<usize>) -> Self {
        v.sort_unstable();
        v.dedup();
        VertexSet(v)
    }

    pub fn full(n: usize) -> Self {
        VertexSet((0..n).collect())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, usize> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn min_vertex(&self) -> Option<usize> {
        self.0.first().copied()
    }

    /// Maps each global index in `0..n` to its position in this set.
    pub fn local_index_map(&self, n: usize) -> Result<Vec<Option<usize>>> {
        let mut map = vec![None; n];
        for (k, &g) in self.0.iter().enumerate() {
            if g >= n {
                return Err(Error::IndexOutOfRange { index: g, n });
            }
            map[g] = Some(k);
        }
        Ok(map)
    }

    /// Translates local indices (positions in `self`) back to global ones.
    pub fn lift(&self, local: &VertexSet) -> VertexSet {
        VertexSet(local.iter().map(|&k| self.0[k]).collect())
    }

    pub fn membership(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &v in &self.0 {
            if v < n {
                m[v] = true;
            }
        }
        m
    }
}

impl From<Vec<usize>> for VertexSet {
    fn from(v: Vec<usize>) -> Self {
        VertexSet::new(v)
    }
}

impl<'a> IntoIterator for &'a VertexSet {
    type Item = &'a usize;
    type IntoIter = std::slice::Iter<'a, usize>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Undirected adjacency structure with optional nonnegative edge weights.
///
/// Neighbor lists are sorted and never contain the vertex itself.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    offsets: Vec<usize>,
    adj: Vec<usize>,
    weights: Option<Vec<f64>>,
}

impl Graph {
    /// Adjacency graph `G(A)`: one edge per nonzero off-diagonal entry.
    pub fn from_matrix(a: &SparseSymMatrix) -> Self {
        let n = a.n();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut adj = Vec::with_capacity(a.nnz());
        offsets.push(0);
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j != i && v != 0.0 {
                    adj.push(j);
                }
            }
            offsets.push(adj.len());
        }
        Graph {
            n,
            offsets,
            adj,
            weights: None,
        }
    }

    /// Builds a weighted graph from an undirected edge list. Each edge is
    /// listed once; duplicates and self-loops are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut lists: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, w) in edges {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, n });
            }
            if j >= n {
                return Err(Error::IndexOutOfRange { index: j, n });
            }
            if i == j {
                return Err(Error::InvalidConfig(format!("self-loop on vertex {i}")));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::NegativeWeight { i, j, weight: w });
            }
            lists[i].push((j, w));
            lists[j].push((i, w));
        }
        let mut offsets = vec![0];
        let mut adj = Vec::new();
        let mut weights = Vec::new();
        for (i, l) in lists.iter_mut().enumerate() {
            l.sort_by_key(|&(j, _)| j);
            if l.windows(2).any(|p| p[0].0 == p[1].0) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate edge at vertex {i}"
                )));
            }
            for &(j, w) in l.iter() {
                adj.push(j);
                weights.push(w);
            }
            offsets.push(adj.len());
        }
        Ok(Graph {
            n,
            offsets,
            adj,
            weights: Some(weights),
        })
    }

    /// Replaces edge weights; `f(i, j)` is evaluated for every directed
    /// adjacency entry and must be symmetric.
    pub fn with_weights(mut self, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut w = Vec::with_capacity(self.adj.len());
        for i in 0..self.n {
            for k in self.offsets[i]..self.offsets[i + 1] {
                w.push(f(i, self.adj[k]));
            }
        }
        self.weights = Some(w);
        self
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.adj.len() / 2
    }

    pub fn is_weighted(&self) -> bool {
        self.weights.is_some()
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Neighbors with their weights; unweighted graphs report weight 1.
    pub fn weighted_neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (s, e) = (self.offsets[i], self.offsets[i + 1]);
        (s..e).map(move |k| {
            let w = self.weights.as_ref().map_or(1.0, |w| w[k]);
            (self.adj[k], w)
        })
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    /// Edge weights in adjacency order (each undirected edge appears twice).
    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Iterates each undirected edge once as `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            self.weighted_neighbors(i)
                .filter(move |&(j, _)| i < j)
                .map(move |(j, w)| (i, j, w))
        })
    }

    /// Relative spread `(max w - min w) / max w` over all edges; `None` for
    /// an edgeless graph. Unweighted graphs have spread 0.
    pub fn weight_spread(&self) -> Option<f64> {
        if self.adj.is_empty() {
            return None;
        }
        let Some(w) = &self.weights else {
            return Some(0.0);
        };
        let (lo, hi) = w
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            });
        if hi <= 0.0 {
            return Some(0.0);
        }
        Some((hi - lo) / hi)
    }

    /// Subgraph induced by `set`, renumbered to `0..set.len()`; weights kept.
    pub fn induced(&self, set: &VertexSet) -> Result<Graph> {
        let local = set.local_index_map(self.n)?;
        let mut offsets = Vec::with_capacity(set.len() + 1);
        let mut adj = Vec::new();
        let mut weights = self.weights.as_ref().map(|_| Vec::new());
        offsets.push(0);
        for &g in set.iter() {
            for k in self.offsets[g]..self.offsets[g + 1] {
                if let Some(l) = local[self.adj[k]] {
                    adj.push(l);
                    if let (Some(out), Some(w)) = (weights.as_mut(), self.weights.as_ref()) {
                        out.push(w[k]);
                    }
                }
            }
            offsets.push(adj.len());
        }
        Ok(Graph {
            n: set.len(),
            offsets,
            adj,
            weights,
        })
    }

    /// Maximal connected components of the subgraph induced by `subset`,
    /// found by breadth-first search. Components are sorted internally and
    /// ordered by their smallest vertex.
    pub fn connected_components(&self, subset: &VertexSet) -> Result<Vec<VertexSet>> {
        let inside = {
            let mut m = vec![false; self.n];
            for &v in subset.iter() {
                if v >= self.n {
                    return Err(Error::IndexOutOfRange {
                        index: v,
                        n: self.n,
                    });
                }
                m[v] = true;
            }
            m
        };
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        for &start in subset.iter() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            queue.push_back(start);
            let mut comp = Vec::new();
            while let Some(u) = queue.pop_front() {
                comp.push(u);
                for &x in self.neighbors(u) {
                    if inside[x] && !seen[x] {
                        seen[x] = true;
                        queue.push_back(x);
                    }
                }
            }
            out.push(VertexSet::new(comp));
        }
        Ok(out)
    }

    pub fn is_connected(&self) -> bool {
        self.n == 0
            || self
                .connected_components(&VertexSet::full(self.n))
                .map(|c| c.len() == 1)
                .unwrap_or(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> Graph {
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
        Graph::from_edges(n, &edges).unwrap()
    }

    #[test]
    fn components_on_path() {
        let g = path(4);
        let c = g
            .connected_components(&VertexSet::new(vec![0, 1, 3]))
            .unwrap();
        assert_eq!(c, vec![VertexSet::new(vec![0, 1]), VertexSet::new(vec![3])]);
        let all = g.connected_components(&VertexSet::full(4)).unwrap();
        assert_eq!(all.len(), 1);
        assert!(g.connected_components(&VertexSet::new(vec![9])).is_err());
    }

    #[test]
    fn components_ordered_by_min_vertex() {
        // 0-3, 1-2, 4 isolated
        let g = Graph::from_edges(5, &[(0, 3, 1.0), (1, 2, 1.0)]).unwrap();
        let c = g.connected_components(&VertexSet::full(5)).unwrap();
        let mins: Vec<_> = c.iter().map(|s| s.min_vertex().unwrap()).collect();
        assert_eq!(mins, vec![0, 1, 4]);
        assert_eq!(c[0], VertexSet::new(vec![0, 3]));
    }

    #[test]
    fn graph_from_matrix_uses_offdiagonal_pattern() {
        let a = SparseSymMatrix::from_triangle_triplets(
            3,
            &[
                (0, 0, 2.0),
                (1, 1, 2.0),
                (2, 2, 2.0),
                (1, 0, -1.0),
                (2, 1, -1.0),
            ],
        )
        .unwrap();
        let g = Graph::from_matrix(&a);
        assert_eq!(g.neighbors(1), &[0, 2]);
        assert_eq!(g.num_edges(), 2);
        for i in 0..3 {
            assert!(!g.neighbors(i).contains(&i));
            for &j in g.neighbors(i) {
                assert!(g.neighbors(j).contains(&i));
            }
        }
    }

    #[test]
    fn induced_subgraph_keeps_weights() {
        let g = Graph::from_edges(4, &[(0, 1, 0.5), (1, 2, 0.9), (2, 3, 0.5)]).unwrap();
        let s = g.induced(&VertexSet::new(vec![1, 2, 3])).unwrap();
        let e: Vec<_> = s.edges().collect();
        assert_eq!(e, vec![(0, 1, 0.9), (1, 2, 0.5)]);
    }

    #[test]
    fn weight_spread() {
        let g = Graph::from_edges(3, &[(0, 1, 0.5), (1, 2, 0.25)]).unwrap();
        assert!((g.weight_spread().unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(path(3).weight_spread(), Some(0.0));
        assert_eq!(Graph::from_edges(2, &[]).unwrap().weight_spread(), None);
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(Graph::from_edges(2, &[(0, 0, 1.0)]).is_err());
        assert!(matches!(
            Graph::from_edges(2, &[(0, 1, -1.0)]),
            Err(Error::NegativeWeight { .. })
        ));
        assert!(Graph::from_edges(2, &[(0, 1, 1.0), (1, 0, 1.0)]).is_err());
    }
}
