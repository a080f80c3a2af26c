use thiserror::Error;

/// Errors raised by the retrodiction toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix has non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian: max |A - A^dag| = {defect:.3e}")]
    NotHermitian { defect: f64 },

    #[error("operator is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e}")]
    NotPsd { min_eigenvalue: f64 },

    #[error("trace is {trace} (expected 1)")]
    NotNormalized { trace: f64 },

    #[error("POVM elements do not sum to identity: max entrywise defect {defect:.3e}")]
    Incomplete { defect: f64 },

    #[error("POVM has no elements")]
    EmptyPovm,

    #[error("function undefined at eigenvalue {eigenvalue:e}")]
    Domain { eigenvalue: f64 },

    #[error("outcome {outcome} has probability {probability:e}; cannot retrodict from it")]
    ZeroProbability { outcome: usize, probability: f64 },

    #[error("dimension {0} is not prime")]
    NotPrime(usize),

    #[error("superposition has norm {norm:e}; state is degenerate")]
    DegenerateSuperposition { norm: f64 },

    #[error("alpha = {alpha} outside the admissible range for {family}")]
    InvalidAlpha { family: &'static str, alpha: f64 },

    #[error("unknown divergence id {0:?}")]
    UnknownDivergence(String),

    #[error("frame operator singular after {attempts} draws")]
    SingularFrame { attempts: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    /// A checked property failed; `dump` holds the inputs that reproduce it.
    #[error("invariant violated: {message}")]
    Violation {
        message: String,
        dump: Box<serde_json::Value>,
    },

    #[error("internal consistency check failed: {0}")]
    Internal(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
