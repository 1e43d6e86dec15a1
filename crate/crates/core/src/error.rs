use thiserror::Error;

/// Errors raised anywhere in the model library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("pole of the gamma function at x = {0}")]
    Pole(f64),

    #[error("singular argument: {0}")]
    Singular(String),

    #[error(
        "quadrature did not converge after {subdivisions} subdivisions \
         (estimate {estimate_re:.6e}{estimate_im:+.6e}i, error bound {error:.3e})"
    )]
    QuadratureNonConvergence { estimate_re: f64, estimate_im: f64, error: f64, subdivisions: usize },

    #[error("ODE step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("covariance factorization failed (smallest eigenvalue {min_eigenvalue:.3e})")]
    Factorization { min_eigenvalue: f64 },

    #[error("method not applicable: {0}")]
    Method(String),

    #[error("characteristic function not normalized: |cf(0) - 1| = {0:.3e}")]
    Normalization(f64),

    #[error("inversion failed: {0}")]
    Inversion(String),

    #[error("price outside no-arbitrage bounds: {0}")]
    OutOfBounds(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
