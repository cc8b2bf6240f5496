use thiserror::Error;

/// Errors produced by the partitioning and solver toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty vertex set")]
    EmptySet,

    #[error("nonpositive diagonal entry {value} at row {index}")]
    NonPositiveDiagonal { index: usize, value: f64 },

    #[error("missing diagonal entry at row {0}")]
    MissingDiagonal(usize),

    #[error(
        "matrix is not symmetric: entry ({row}, {col}) differs from its transpose by {diff:e}"
    )]
    NotSymmetric { row: usize, col: usize, diff: f64 },

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not positive definite (pivot {pivot:e} at column {column})")]
    NotPositiveDefinite { column: usize, pivot: f64 },

    #[error("permutation is not a bijection on 0..{0}")]
    InvalidPermutation(usize),

    #[error("vertex sets do not form a bipartition: {0}")]
    InvalidBipartition(&'static str),

    #[error("negative edge weight {weight} on edge ({i}, {j})")]
    NegativeWeight { i: usize, j: usize, weight: f64 },

    #[error("gamma must lie in [0, 1), got {0}")]
    GammaOutOfRange(f64),

    #[error("degenerate vector: all components are equal, no split possible")]
    DegenerateVector,

    #[error("Rayleigh quotient denominator vanishes")]
    DegenerateDenominator,

    #[error("dense oracle limited to n <= {limit}, got {n}")]
    TooLargeForDense { n: usize, limit: usize },

    #[error("incomplete Cholesky broke down after {attempts} attempts (last shift {sigma:e})")]
    IcBreakdown { attempts: usize, sigma: f64 },

    #[error("eigensolver did not converge in {iterations} iterations (residual {residual:e})")]
    EigNotConverged { iterations: usize, residual: f64 },

    #[error("conjugate gradient breakdown: {0}")]
    PcgBreakdown(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
