use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter or input failed validation before any numerics ran.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A numerical precondition or postcondition did not hold.
    #[error("contract violation: {0}")]
    Contract(String),
    /// A qubit index outside the register.
    #[error("qubit {index} out of range for a {n_qubits}-qubit register")]
    Index { index: usize, n_qubits: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
