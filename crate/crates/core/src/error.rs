use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("rank-deficient least-squares system: numerical rank {rank} of {columns} columns")]
    RankDeficient { rank: usize, columns: usize },

    #[error(
        "model infeasible: predicted no-click probability is zero at efficiency #{index} \
         but the observed frequency is {frequency}"
    )]
    Infeasible { index: usize, frequency: f64 },

    #[error(
        "singular Fisher information: predicted no-click probability is zero at efficiency #{0}"
    )]
    SingularInformation(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
