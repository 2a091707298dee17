//! Error type shared across the toolkit.

use thiserror::Error;

/// Errors produced by simulator, circuit, and analysis operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("gate matrix is not unitary (deviation {deviation:.3e})")]
    NonUnitary { deviation: f64 },

    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    #[error("parameter slot {slot} out of range for {n_params} parameters")]
    SlotOutOfRange { slot: usize, n_params: usize },

    #[error("shift rule unsupported for slot {slot}: {reason}")]
    ShiftRuleUnsupported { slot: usize, reason: String },

    #[error("register size limit exceeded: {n_qubits} qubits (limit {limit})")]
    RegisterTooLarge { n_qubits: usize, limit: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cost function returned a non-finite value at epoch {epoch}: {value}")]
    NonFiniteCost { epoch: usize, value: f64 },

    #[error("copy budget infeasible: {0}")]
    Infeasible(String),

    #[error("rank sweep cap exceeded: rank still growing at M={m} (rank {rank})")]
    UnsaturatedRank { m: usize, rank: usize },

    #[error("serialization error: {0}")]
    Serialization(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
