use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("{name} {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("unphysical covariance: smallest symplectic eigenvalue {nu} < 1")]
    Unphysical { nu: f64 },

    #[error("feedback map violates the commutation relations (residual {residual:e})")]
    CcrViolation { residual: f64 },

    #[error("no steady state: drift matrix is not Hurwitz (spectral abscissa {abscissa:e})")]
    NotHurwitz { abscissa: f64 },

    #[error("singular linear system in {context} (reciprocal condition estimate {rcond:e})")]
    Singular { context: &'static str, rcond: f64 },

    #[error("quadrature did not converge: {detail}")]
    QuadratureNotConverged { detail: String },

    #[error("trajectory diverged at t = {time}: max entry {max_entry:e}")]
    Diverged { time: f64, max_entry: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name: name.into(), reason: reason.into() }
    }
}
