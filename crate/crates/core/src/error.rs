use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("nonpositive measure at point {0}")]
    NonpositiveMeasure(usize),

    #[error("asymmetric kernel at ({0},{1})")]
    AsymmetricKernel(usize, usize),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("support graph is disconnected: {0}")]
    Disconnected(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate power: {0}")]
    DegeneratePower(String),

    #[error("solver failed: {0}")]
    Solver(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl LabError {
    pub fn pre(msg: impl Into<String>) -> Self {
        LabError::Precondition(msg.into())
    }
}
