use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("shapes {lhs:?} and {rhs:?} cannot be broadcast together")]
    Broadcast { lhs: Vec<usize>, rhs: Vec<usize> },
    #[error("dtype mismatch: {0}")]
    DType(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("matmul inner dimensions differ: {lhs:?} x {rhs:?}")]
    InnerDim { lhs: Vec<usize>, rhs: Vec<usize> },
    #[error("axis {axis} out of range for rank {rank}")]
    Axis { axis: usize, rank: usize },
    #[error("unsupported transform length {0}: only powers of two are supported")]
    UnsupportedLength(usize),
    #[error("loss must be a scalar, got shape {0:?}")]
    NotScalar(Vec<usize>),
    #[error("node {0} does not belong to this tape")]
    NotOnTape(usize),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
}

pub type Result<T> = std::result::Result<T, TensorError>;
