use thiserror::Error;

/// Errors reported by the structured solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        op: &'static str,
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("invalid truncation policy: {0}")]
    InvalidPolicy(String),

    #[error("matrix is rank deficient (column {column} has no admissible pivot)")]
    RankDeficient { column: usize },

    #[error("grid size n = {n} is below the minimum of 4")]
    GridTooSmall { n: usize },

    #[error("n = {n} exceeds the dense limit {max}")]
    TooLargeForDense { n: usize, max: usize },

    #[error("exponential sum cannot reach eps = {eps:e} on [{a:e}, {b:e}] within {cap} terms")]
    QuadratureUnreachable { a: f64, b: f64, eps: f64, cap: usize },

    #[error("spectrum [{lo:e}, {hi:e}] is not contained in the quadrature interval [{a:e}, {b:e}]")]
    SpectrumOutsideInterval { lo: f64, hi: f64, a: f64, b: f64 },

    #[error("boundary data is not side-separable: {0}")]
    NonSeparableBoundary(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
