use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{what} contains a non-finite entry")]
    NonFinite { what: &'static str },

    #[error("matrix is degenerate (A^T A has no positive eigenvalue)")]
    DegenerateMatrix,

    #[error("parameter {name} = {value} rejected: requires {constraint}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    #[error("numerical divergence at iteration {iteration}: {detail}")]
    NumericalDivergence { iteration: usize, detail: String },

    #[error(
        "candidate solution is stale: fixed-point residual {residual:.3e} exceeds {threshold:.3e}"
    )]
    StaleSolution { residual: f64, threshold: f64 },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
