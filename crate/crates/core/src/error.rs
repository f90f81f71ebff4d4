use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("invalid channel parameters: {0}")]
    InvalidChannel(String),

    #[error("matrix is not Hermitian (residual {0:.3e})")]
    NotHermitian(f64),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("solver did not converge after {iterations} iterations (psd residual {psd_residual:.3e}, tp residual {tp_residual:.3e}, stationarity {stationarity:.3e})")]
    NonConvergence {
        iterations: usize,
        psd_residual: f64,
        tp_residual: f64,
        stationarity: f64,
    },

    #[error("constraint set is infeasible: {0}")]
    Infeasible(String),

    #[error("singular configuration: {0}")]
    SingularConfiguration(String),

    #[error("degenerate iterate: vector vanished after projection")]
    DegenerateIterate,

    #[error("direction search exhausted {steps} steps over {restarts} restarts")]
    DirectionSearch {
        steps: usize,
        restarts: usize,
        partial: Box<crate::estimate::DirectionEstimate>,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid settings: {0}")]
    InvalidSpec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Solver non-convergence is distinguished from validation failures by callers
    /// that map errors to process exit codes.
    pub fn is_convergence_failure(&self) -> bool {
        matches!(self, Error::NonConvergence { .. } | Error::DirectionSearch { .. })
    }
}
