use thiserror::Error;

use crate::minimax::MinimaxResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),

    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("alternance points must be positive and strictly increasing")]
    InvalidAlternance,

    #[error(
        "alternance system is ill-conditioned (condition estimate {condition:.3e}); degree too high for this interval"
    )]
    IllConditioned { condition: f64 },

    #[error("remez did not converge after {iterations} iterations (equioscillation defect {defect:.3e})")]
    NotConverged { iterations: usize, defect: f64, best: Box<MinimaxResult> },

    #[error("bisection failed: {0}")]
    Bisection(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite values produced by {0}")]
    NonFinite(&'static str),

    #[error("zero matrix cannot be normalized")]
    ZeroMatrix,

    #[error("oracle SVD is capped at {cap} columns, got {cols}")]
    OracleCap { cols: usize, cap: usize },

    #[error("singular-value interval unknown: supply an a-hint, a schedule or a delta preprocessing design")]
    UnknownInterval,

    #[error("sigma_1 bound radicand is negative ({0:.3e}); input is not an orthonormal point plus a tangent step")]
    NegativeRadicand(f64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
