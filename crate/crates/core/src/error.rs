use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("index {index} out of range (len {len})")]
    Index { index: usize, len: usize },
    #[error("{n_qubits} qubits exceeds the dense cap of {cap}")]
    Resource { n_qubits: usize, cap: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate state: trace {trace:e} is too small to normalize")]
    DegenerateState { trace: f64 },
    #[error("non-finite {what} at t = {time}")]
    NonFinite { what: &'static str, time: f64 },
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
