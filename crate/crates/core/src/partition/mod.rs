//! Recursive spectral bipartitioning driven by coefficient weights.

mod io;
mod split;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::eigen::{lobpcg_smallest, EigKind, EigProblemSpec};
use crate::error::{Error, Result};
use crate::laplacian::{build_laplacians, cbs_weights, has_uniform_weights};
use crate::sparse::{Graph, SparseSymMatrix, VertexSet};

pub use io::{check_partition, read_partition, write_partition};
pub use split::{
    candidate_sizes, forced_count, split_from_vector, Bipartition, Candidate, CutSummary,
};

/// Partitioning objective together with its eigenproblem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Weighted cut over edge cut, from `L_w v = lambda L v`.
    Cbs,
    /// Edge cut, from the Fiedler vector.
    Rsb,
    /// Weighted cut over `|I||J|`, from `L_w v = lambda v`.
    MinCut,
    /// Min-max cut, from `L_w v = lambda D_w v`.
    Mcut,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Cbs, Method::MinCut, Method::Mcut, Method::Rsb];

    pub fn eig_kind(self) -> EigKind {
        match self {
            Method::Cbs => EigKind::CbsRatio,
            Method::Rsb => EigKind::Fiedler,
            Method::MinCut => EigKind::MinCut,
            Method::Mcut => EigKind::Mcut,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Cbs => "cbs",
            Method::Rsb => "rsb",
            Method::MinCut => "mincut",
            Method::Mcut => "mcut",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cbs" => Ok(Method::Cbs),
            "rsb" | "fiedler" | "standard" => Ok(Method::Rsb),
            "mincut" => Ok(Method::MinCut),
            "mcut" => Ok(Method::Mcut),
            _ => Err(Error::InvalidConfig(format!("unknown method '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionConfig {
    pub method: Method,
    pub max_size: usize,
    pub load_balance: f64,
    /// Candidate splits per sweep.
    pub candidates: usize,
    pub eig_tolerance: f64,
    pub eig_max_iter: usize,
    pub sigma: f64,
    pub droptol: f64,
    pub seed: u64,
}

impl PartitionConfig {
    pub fn new(method: Method, max_size: usize) -> Self {
        PartitionConfig {
            method,
            max_size,
            load_balance: 0.8,
            candidates: 32,
            eig_tolerance: 1e-4,
            eig_max_iter: 500,
            sigma: 0.1,
            droptol: 1e-3,
            seed: 42,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_size == 0 {
            return Err(Error::InvalidConfig("max size must be at least 1".into()));
        }
        if !(self.load_balance > 0.0 && self.load_balance <= 1.0) {
            return Err(Error::InvalidConfig(
                "load balance must lie in (0, 1]".into(),
            ));
        }
        if self.candidates == 0 {
            return Err(Error::InvalidConfig(
                "candidate count must be at least 1".into(),
            ));
        }
        self.eig_spec(self.method.eig_kind()).validate()
    }

    pub fn eig_spec(&self, kind: EigKind) -> EigProblemSpec {
        EigProblemSpec {
            tolerance: self.eig_tolerance,
            max_iter: self.eig_max_iter,
            sigma: self.sigma,
            droptol: self.droptol,
            seed: self.seed,
            ..EigProblemSpec::new(kind)
        }
    }
}

/// Record of one bipartitioning step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub depth: usize,
    /// Smallest vertex of the set being split.
    pub min_vertex: usize,
    pub size: usize,
    /// Uniform weights: the split came from the Fiedler vector and edge cut.
    pub fallback: bool,
    pub eig_kind: EigKind,
    pub eigenvalue: f64,
    pub eig_residual: f64,
    pub eig_iterations: usize,
    pub eig_converged: bool,
    pub split_sizes: (usize, usize),
    pub objective: f64,
    pub cut: CutSummary,
    pub candidates: Vec<Candidate>,
    /// Connected components of `I` and `J` combined.
    pub components: usize,
    pub component_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionResult {
    pub subdomains: Vec<VertexSet>,
    pub steps: Vec<StepLog>,
    pub fallback_steps: usize,
    /// The input graph itself had several components.
    pub disconnected_input: bool,
    pub input_components: usize,
}

/// One step of the recursion on a connected weighted graph: split by the
/// eigenvector of the configured method, then break both sides into
/// connected components. Vertex sets are local to `g`.
pub fn bipartition_step(g: &Graph, config: &PartitionConfig) -> Result<(Vec<VertexSet>, StepLog)> {
    config.validate()?;
    let fallback = config.method == Method::Cbs && has_uniform_weights(g);
    let (kind, objective_method) = if fallback {
        (EigKind::Fiedler, Method::Rsb)
    } else {
        (config.method.eig_kind(), config.method)
    };
    let lap = build_laplacians(g)?;
    let eig = lobpcg_smallest(&config.eig_spec(kind), &lap)?;
    if !eig.converged {
        return Err(Error::EigNotConverged {
            iterations: eig.iterations,
            residual: eig.residual_norm,
        });
    }
    let split = split_from_vector(
        &eig.eigenvector,
        g,
        config.load_balance,
        config.candidates,
        objective_method,
    )?;
    let mut parts = g.connected_components(&split.i)?;
    parts.extend(g.connected_components(&split.j)?);
    parts.sort_by_key(|p| p.min_vertex());
    let log = StepLog {
        depth: 0,
        min_vertex: 0,
        size: g.n(),
        fallback,
        eig_kind: kind,
        eigenvalue: eig.eigenvalue,
        eig_residual: eig.residual_norm,
        eig_iterations: eig.iterations,
        eig_converged: eig.converged,
        split_sizes: (split.i.len(), split.j.len()),
        objective: split.objective,
        cut: split.cut,
        candidates: split.candidates,
        components: parts.len(),
        component_sizes: parts.iter().map(VertexSet::len).collect(),
    };
    Ok((parts, log))
}

/// Recursively partitions the adjacency graph of `a` until every part has
/// at most `config.max_size` vertices. Weights come from the full matrix.
pub fn recursive_partition(
    a: &SparseSymMatrix,
    config: &PartitionConfig,
) -> Result<PartitionResult> {
    let mut steps = Vec::new();
    recursive_partition_logged(a, config, &mut steps)
}

/// As [`recursive_partition`], but steps are appended to `steps` as they
/// complete, so the log survives a failing eigensolve.
pub fn recursive_partition_logged(
    a: &SparseSymMatrix,
    config: &PartitionConfig,
    steps: &mut Vec<StepLog>,
) -> Result<PartitionResult> {
    config.validate()?;
    let g = cbs_weights(a)?;
    let roots = g.connected_components(&VertexSet::full(g.n()))?;
    let input_components = roots.len();

    let mut done = Vec::new();
    let mut stack: Vec<(VertexSet, usize)> = roots.into_iter().rev().map(|s| (s, 0)).collect();
    let first_step = steps.len();
    while let Some((set, depth)) = stack.pop() {
        if set.len() <= config.max_size {
            done.push(set);
            continue;
        }
        let sub = g.induced(&set)?;
        let (parts, mut log) = bipartition_step(&sub, config)?;
        log.depth = depth;
        log.min_vertex = set.min_vertex().unwrap_or(0);
        steps.push(log);
        for p in parts.into_iter().rev() {
            stack.push((set.lift(&p), depth + 1));
        }
    }
    done.sort_by_key(|s| s.min_vertex());
    let new_steps = steps[first_step..].to_vec();
    Ok(PartitionResult {
        subdomains: done,
        fallback_steps: new_steps.iter().filter(|s| s.fallback).count(),
        steps: new_steps,
        disconnected_input: input_components > 1,
        input_components,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(k: usize, weight: impl Fn(usize, usize) -> f64) -> SparseSymMatrix {
        let idx = |x: usize, y: usize| y * k + x;
        let mut t = Vec::new();
        for y in 0..k {
            for x in 0..k {
                let u = idx(x, y);
                t.push((u, u, 4.0));
                if x > 0 {
                    t.push((u, idx(x - 1, y), -weight(u, idx(x - 1, y))));
                }
                if y > 0 {
                    t.push((u, idx(x, y - 1), -weight(u, idx(x, y - 1))));
                }
            }
        }
        SparseSymMatrix::from_triangle_triplets(k * k, &t).unwrap()
    }

    fn assert_partition(a: &SparseSymMatrix, r: &PartitionResult, max: usize) {
        check_partition(&r.subdomains, a.n()).unwrap();
        let g = Graph::from_matrix(a);
        for s in &r.subdomains {
            assert!(s.len() <= max);
            assert_eq!(g.connected_components(s).unwrap().len(), 1);
        }
    }

    #[test]
    fn small_input_is_single_subdomain() {
        let a = grid(3, |_, _| 1.0);
        let r = recursive_partition(&a, &PartitionConfig::new(Method::Cbs, 9)).unwrap();
        assert_eq!(r.subdomains, vec![VertexSet::full(9)]);
        assert!(r.steps.is_empty());
    }

    #[test]
    fn uniform_weights_fall_back_to_fiedler() {
        let a = grid(8, |_, _| 1.0);
        let cbs = recursive_partition(&a, &PartitionConfig::new(Method::Cbs, 20)).unwrap();
        let rsb = recursive_partition(&a, &PartitionConfig::new(Method::Rsb, 20)).unwrap();
        assert!(cbs.fallback_steps > 0);
        assert_eq!(cbs.fallback_steps, cbs.steps.len());
        assert_eq!(cbs.subdomains, rsb.subdomains);
        assert_partition(&a, &cbs, 20);
    }

    #[test]
    fn every_method_yields_connected_partition() {
        let a = grid(9, |u, v| 1.0 + ((u * 7 + v * 3) % 5) as f64 * 0.3);
        for method in Method::ALL {
            let r = recursive_partition(&a, &PartitionConfig::new(method, 12)).unwrap();
            assert_partition(&a, &r, 12);
            let again = recursive_partition(&a, &PartitionConfig::new(method, 12)).unwrap();
            assert_eq!(r, again);
        }
    }

    #[test]
    fn disconnected_input_is_split_by_components() {
        let t = vec![
            (0, 0, 2.0),
            (1, 1, 2.0),
            (1, 0, -1.0),
            (2, 2, 2.0),
            (3, 3, 2.0),
            (3, 2, -1.0),
        ];
        let a = SparseSymMatrix::from_triangle_triplets(4, &t).unwrap();
        let r = recursive_partition(&a, &PartitionConfig::new(Method::Cbs, 2)).unwrap();
        assert!(r.disconnected_input);
        assert_eq!(r.subdomains.len(), 2);
        assert!(r.steps.is_empty());
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("metis".parse::<Method>().is_err());
    }
}
