use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("eigenvalue iteration failed to converge")]
    NoConvergence,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("budget exceeded: {what} needs {needed}, limit is {limit}")]
    BudgetExceeded {
        what: &'static str,
        needed: u128,
        limit: u128,
    },

    #[error("grading check failed: {0}")]
    Grading(String),

    #[error("point outside domain: {0}")]
    OutsideDomain(String),

    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("fewer than {needed} usable grid points ({found} found)")]
    InsufficientGrid { needed: usize, found: usize },

    #[error("grid point {t} outside valid range [{min}, {max}]")]
    OutOfRange { t: f64, min: f64, max: f64 },

    #[error("congruence violated: det(B) = {det} is not 1 mod {q}")]
    Congruence { det: i64, q: i64 },

    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("i/o or format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
