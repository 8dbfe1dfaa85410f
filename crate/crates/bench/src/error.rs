use thiserror::Error;

pub type Result<T> = std::result::Result<T, BenchError>;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical error: {0}")]
    Numerical(sbmph::Error),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl BenchError {
    /// Process exit code for this error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 2,
            BenchError::Numerical(_) => 3,
            BenchError::Io(_) => 4,
        }
    }
}

impl From<sbmph::Error> for BenchError {
    fn from(e: sbmph::Error) -> Self {
        match e {
            sbmph::Error::InvalidParams(msg) => BenchError::Config(msg),
            sbmph::Error::Parse { .. } => BenchError::Config(e.to_string()),
            sbmph::Error::Io(io) => BenchError::Io(io),
            other => BenchError::Numerical(other),
        }
    }
}
