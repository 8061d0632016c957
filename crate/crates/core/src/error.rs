use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MboError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("variance must be positive, got {0}")]
    NonPositiveVariance(f64),
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("surface tensions rejected: {0}")]
    Sigma(#[from] crate::tensions::SigmaRejection),
    #[error("zero-sum precondition violated at cell {cell}: sum = {sum:e}")]
    NotZeroSum { cell: usize, sum: f64 },
    #[error("negative localization weight at cell {cell}: {value}")]
    NegativeWeight { cell: usize, value: f64 },
    #[error("non-finite potential at step {step}")]
    NonFinite { step: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("ledger violation at row {row}: {detail}")]
    LedgerViolation { row: usize, detail: String },
}

impl From<std::io::Error> for MboError {
    fn from(e: std::io::Error) -> Self {
        MboError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, MboError>;
