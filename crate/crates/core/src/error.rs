use thiserror::Error;

/// Failure modes shared by every module of the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("coefficient not symmetric at t = {t}: residual {residual:e}")]
    NotSymmetric { t: f64, residual: f64 },
    #[error("no convergence: {0}")]
    Convergence(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("identity check failed: {0}")]
    Identity(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Convergence(_) => 3,
            Error::Identity(_) => 4,
            Error::Numerical(_) => 3,
            _ => 2,
        }
    }
}
