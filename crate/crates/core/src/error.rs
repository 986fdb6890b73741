use thiserror::Error;

/// Errors raised by the slice-mean library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is rank deficient: numerical rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("matrix is not symmetric positive definite (pivot {pivot} at index {index})")]
    NotSpd { index: usize, pivot: f64 },

    #[error(
        "projection onto the first {k} coordinates does not map ker Q onto R^{k} (rank {rank})"
    )]
    ProjectionNotOnto { k: usize, rank: usize },

    #[error("no dimension N <= {cap} satisfies the slice conditions")]
    Infeasible { cap: usize },

    #[error("N = {n} is below the minimal admissible dimension {n_min}")]
    BelowMinN { n: usize, n_min: usize },

    #[error("slice is empty at N = {n}: N <= |z0_N|^2 = {norm_sq}")]
    SliceEmpty { n: usize, norm_sq: f64 },

    #[error("deterministic quadrature supports k <= 3, got k = {k}")]
    UnsupportedDimension { k: usize },

    #[error("integrand returned a non-finite value at {at:?}")]
    NonFinite { at: Vec<f64> },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("function not admissible: {0}")]
    NotAdmissible(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
