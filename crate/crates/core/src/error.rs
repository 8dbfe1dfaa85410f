use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("degenerate pivot: first column of the trailing block is zero")]
    DegeneratePivot,

    #[error("rank deficiency at pivot round {round}: all residual norms are zero")]
    RankDeficient { round: usize },

    #[error("eigensolver did not converge for frequency {frequency} (residual {residual:e})")]
    EigenNoConvergence { frequency: i32, residual: f64 },

    #[error("instance too large for exhaustive enumeration: {count} balanced assignments (limit {limit})")]
    TooLarge { count: u128, limit: u128 },

    #[error("malformed instance file, line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn params(msg: impl Into<String>) -> Self {
        Error::InvalidParams(msg.into())
    }
}
