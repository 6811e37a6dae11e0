//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("unknown model `{name}`; available: {available}")]
    UnknownModel { name: String, available: String },

    #[error("invalid coefficient expression: {0}")]
    BadExpression(#[from] crate::expr::ParseError),

    #[error("coefficient a(t) vanishes near t = {t:.6}")]
    SingularCoefficient { t: f64 },

    #[error("ODE solver failure: {detail}")]
    SolverFailure { detail: String },

    #[error("trajectory exceeded the blow-up bound near t = {t:.6}")]
    BlowUp { t: f64 },

    #[error("characteristic function vanishes at t = {t:.6}; kernel is singular there")]
    SingularMu { t: f64 },

    #[error("quadrature failure: {detail}")]
    QuadratureFailure { detail: String },

    #[error("gamma(t) = gamma(s) at t = {t:.6}, s = {s:.6}; two-time kernel is degenerate")]
    CoincidentGamma { t: f64, s: f64 },

    #[error("Gaussian integral requires a nonzero quadratic coefficient")]
    ZeroQuadraticCoefficient,

    #[error(
        "kernel phase under-resolved on the grid at t = {t:.6}: \
         h·max|dS/dy| = {phase_step:.3} > π/4; suggested grid size n ≥ {suggested_n}"
    )]
    UnderResolvedPhase {
        t: f64,
        phase_step: f64,
        suggested_n: usize,
    },

    #[error("history does not provide the state at s = {s:.6}")]
    HistoryGap { s: f64 },

    #[error("non-finite values detected in iteration {iter}")]
    NanDetected { iter: usize },

    #[error("time {t:.6} is outside the valid range [{lo:.6}, {hi:.6}) for this operation")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
