//! Sparse symmetric storage, adjacency graphs and Matrix Market I/O.

mod graph;
mod matrix;
pub mod mm;

pub use graph::{Graph, VertexSet};
pub use matrix::{SparseSymMatrix, SYMMETRY_TOLERANCE};
