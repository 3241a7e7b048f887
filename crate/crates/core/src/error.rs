use thiserror::Error;

/// Errors raised by the verification library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("potential is not positive semidefinite: eigenvalue {eigenvalue:e} at x = {x}")]
    NotPsd { x: f64, eigenvalue: f64 },

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("rank-deficient system: pivot norm {norm:e} at function {index}")]
    RankDeficient { index: usize, norm: f64 },

    #[error("quadrature did not converge: estimated error {error:e} after {intervals} intervals")]
    Quadrature { error: f64, intervals: usize },

    #[error("consistency failure: {0}")]
    Consistency(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("search failure: {0}")]
    SearchFailure(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
