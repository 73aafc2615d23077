use thiserror::Error;

use crate::signal::Shape;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch { expected: Shape, actual: Shape },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("vertex {vertex} out of range for {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("zero degree at vertex {0}: diagonal preconditioner is singular")]
    SingularPreconditioner(usize),

    #[error("zero Laplacian diagonal at vertex {0}: normalized scaling is singular")]
    SingularScaling(usize),

    #[error("all trial directions dropped: degenerate basis")]
    DegenerateBasis,

    #[error("matrix order {n} exceeds the dense solver cap {cap}")]
    CapacityExceeded { n: usize, cap: usize },

    #[error("matrix not symmetric: |a[{i},{j}] - a[{j},{i}]| = {delta:e}")]
    NotSymmetric { i: usize, j: usize, delta: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
