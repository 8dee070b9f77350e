use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },
    #[error("softmax row has every position masked")]
    InvalidMask,
    #[error("backward() needs a scalar loss, got shape {0:?}")]
    NonScalarLoss(alloc::vec::Vec<usize>),
    #[error("{op} is undefined for input {value}")]
    Domain { op: &'static str, value: f64 },
    #[error("instance size {0} is invalid (need at least 2 cities)")]
    InvalidSize(usize),
    #[error("{solver} supports at most {max} cities, got {n}")]
    SizeLimit { solver: &'static str, n: usize, max: usize },
    #[error("not a permutation of 0..{0}")]
    InvalidPermutation(usize),
    #[error("size mismatch: expected {expected} cities, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("index {index} out of range (limit {limit})")]
    OutOfRange { index: usize, limit: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("training diverged at epoch {epoch}, batch {batch}: loss {loss}")]
    Divergence { epoch: usize, batch: usize, loss: f64 },
    #[error("optimum length must be positive, got {0}")]
    NonPositiveOptimum(f64),
    #[error("{0} needs a non-empty input")]
    Empty(&'static str),
    #[error("2-opt did not converge within {0} passes")]
    PassLimit(usize),
    #[error("missing parameter {0}")]
    MissingParam(String),
}
