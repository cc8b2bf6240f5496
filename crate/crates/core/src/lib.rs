//! Spectral partitioning of SPD matrix graphs driven by matrix coefficients.
//!
//! Edge weights `w_ij = |a_ij| / sqrt(a_ii a_jj)` turn the adjacency graph of
//! a symmetric positive definite matrix into a weighted graph whose
//! bipartitions are scored by how strongly they couple the two blocks in the
//! energy inner product. Splits that keep that coupling small give better
//! additive Schwarz (block Jacobi) preconditioners. The crate contains the
//! partitioner, the LOBPCG eigensolver it relies on, the Schwarz
//! preconditioner and PCG driver used to measure partition quality, and a
//! generator for 2D jump-coefficient diffusion test problems.

pub mod bench;
pub mod cbs;
pub mod eigen;
mod error;
pub mod factor;
pub mod laplacian;
pub mod model;
pub mod partition;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
pub use sparse::{Graph, SparseSymMatrix, VertexSet};
