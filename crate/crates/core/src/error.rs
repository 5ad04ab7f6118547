use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix must be square, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{routine} failed (info = {info})")]
    Solver { routine: &'static str, info: i32 },

    #[error("degenerate pencil: alpha = beta = 0 at index {index}")]
    DegeneratePencil { index: usize },

    #[error(
        "matrix is numerically singular (smallest singular value {smin:.3e} <= {threshold:.3e})"
    )]
    Singular { smin: f64, threshold: f64 },

    #[error("domain violation: {0}")]
    Domain(String),

    #[error("guard violated: {0}")]
    Guard(String),

    #[error("expected {expected} points, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("kernel Gram determinant {value:.3e} violates positive semidefiniteness")]
    PsdViolation { value: f64 },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("empty sample")]
    EmptySample,
}

pub type Result<T> = std::result::Result<T, Error>;
