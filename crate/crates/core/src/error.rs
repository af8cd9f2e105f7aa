use thiserror::Error;

#[derive(Debug, Error)]
pub enum WsrmError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("degenerate receive filter at cell {cell}, subcarrier {subcarrier}")]
    DegenerateFilter { cell: usize, subcarrier: usize },

    #[error("singular signal term at cell {cell}, subcarrier {subcarrier}")]
    SingularSignal { cell: usize, subcarrier: usize },

    #[error("matrix is not Hermitian (asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("non-finite objective: {0}")]
    NonFiniteObjective(f64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, WsrmError>;
