use thiserror::Error;

/// Errors raised by the library.
///
/// Variants split into two families: *validation* errors (malformed or
/// inconsistent input) and *domain* errors (well-formed input outside the
/// mathematical domain of an operation). The CLI maps them to distinct exit
/// codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { what: String, deviation: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        got: usize,
    },

    #[error("invalid {what}: {reason}")]
    Invalid { what: String, reason: String },

    #[error("eigenvalue {eigenvalue:e} of {what} is outside the domain of {function}")]
    OutOfDomain {
        what: String,
        function: String,
        eigenvalue: f64,
    },

    #[error("{what} must be positive and finite, got {value}")]
    NonPositive { what: String, value: f64 },

    #[error("degenerate information: {0}")]
    DegenerateInformation(String),

    #[error("ill-posed derivative for parameter {param}: d rho has weight {magnitude:e} outside the support of rho")]
    IllPosedDerivative { param: usize, magnitude: f64 },

    #[error("state is rank deficient (min eigenvalue {min_eigenvalue:e}); the RLD needs a full-rank state")]
    RankDeficient { min_eigenvalue: f64 },

    #[error("unidentifiable parameters: classical Fisher information is singular (min eigenvalue {min_eigenvalue:e})")]
    Unidentifiable { min_eigenvalue: f64 },

    #[error("Fock truncation too small: trace deficit {deficit:e} exceeds {limit:e}; use n_trunc >= {required}")]
    Truncation {
        deficit: f64,
        limit: f64,
        required: usize,
    },
}

impl Error {
    /// True for input-shape and schema problems, false for numerical or
    /// mathematical domain failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::NotHermitian { .. } | Error::DimensionMismatch { .. } | Error::Invalid { .. }
        )
    }

    pub(crate) fn invalid(what: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what: what.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn dims(context: impl Into<String>, expected: usize, got: usize) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
            expected,
            got,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
