use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("grid needs at least 8 points, got {n}")]
    GridTooSmall { n: usize },

    #[error("coefficient sample {index} is negative ({value})")]
    NegativeCoefficient { index: usize, value: f64 },

    #[error("leading coefficient a2 is not positive at x = {x} (value {value})")]
    NonPositiveLeading { x: f64, value: f64 },

    #[error("eigensolver did not converge: worst residual {worst_residual:e}")]
    EigenSolver { worst_residual: f64 },

    #[error("function is not finite at eigenvalue {lambda}")]
    NonFinite { lambda: f64 },

    #[error("function is not nondecreasing near {at}")]
    NonMonotone { at: f64 },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("step size underflow at x = {x} (lambda = {lambda})")]
    StepUnderflow { x: f64, lambda: f64 },

    #[error("growth certificate failed for lambda = {lambda}: worst ratio {worst_ratio}")]
    CertificateFailed { lambda: f64, worst_ratio: f64 },

    #[error("inequality check failed: {0}")]
    InequalityFailed(String),

    #[error("test family is empty")]
    EmptyFamily,

    #[error("band {j} contains no eigenvalues")]
    EmptyBand { j: usize },

    #[error("function is not supported inside the admissible region: {0}")]
    Support(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by malformed input rather than by the numerics.
    pub fn is_schema(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::GridTooSmall { .. }
                | Error::NegativeCoefficient { .. }
                | Error::NonPositiveLeading { .. }
                | Error::OutOfRange(_)
                | Error::EmptyFamily
                | Error::Support(_)
                | Error::Json(_)
        )
    }

    pub fn is_certificate(&self) -> bool {
        matches!(self, Error::CertificateFailed { .. } | Error::InequalityFailed(_))
    }
}
