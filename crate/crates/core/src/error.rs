use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The request exceeds a hard size limit (enumeration cap, integer width).
    #[error("capacity exceeded: {what} is {actual}, limit is {limit}")]
    Capacity {
        what: &'static str,
        actual: u64,
        limit: u64,
    },

    /// A forced measurement outcome disagrees with the deterministic one.
    #[error("qubit {qubit}: forced outcome {forced} contradicts deterministic outcome {actual}")]
    Contradiction {
        qubit: usize,
        forced: i8,
        actual: i8,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
