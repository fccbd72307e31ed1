use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix dimension {0} is outside the supported range 2..=16")]
    Dimension(usize),
    #[error("operation needs a 2x2 system, got n = {0}")]
    NotTwoByTwo(usize),
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("eigensolver did not converge")]
    NonConvergence,
    #[error("matrix is defective (eigenvector condition number {condition:.3e})")]
    Defective { condition: f64 },
    #[error("matrix is not positive stable (min Re lambda = {mu})")]
    NotPositiveStable { mu: f64 },
    #[error("zero vector")]
    ZeroVector,
    #[error("matrix is not Hermitian positive definite")]
    NotPositiveDefinite,
    #[error("Lyapunov inequality fails at rate {rate}: residual {residual:.3e}")]
    NotAdmissible { rate: f64, residual: f64 },
    #[error("rate {rate} outside admissible interval [{lo}, {hi}]")]
    RateOutOfRange { rate: f64, lo: f64, hi: f64 },
    #[error("search failed: {0}")]
    SearchFailure(String),
    #[error("mode k = 0 has no decay certificate")]
    ZeroMode,
    #[error("mode cutoff {cutoff} too large for grid of size {grid}")]
    CutoffTooLarge { cutoff: usize, grid: usize },
    #[error("initial field not normalized: mass {mass}, expected 2*pi")]
    NotNormalized { mass: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Dimension(_)
            | Error::NotTwoByTwo(_)
            | Error::Defective { .. }
            | Error::NotPositiveStable { .. }
            | Error::NonConvergence => 2,
            Error::NotAdmissible { .. } | Error::SearchFailure(_) => 3,
            _ => 1,
        }
    }
}
