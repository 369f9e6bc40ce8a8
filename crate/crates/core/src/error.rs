use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A scalar argument fell outside the domain of the function.
    #[error("{func}: argument {value} outside domain {domain}")]
    Domain {
        func: &'static str,
        value: f64,
        domain: &'static str,
    },

    /// A constructor rejected a field value.
    #[error("invalid {field}: {reason}")]
    InvalidField { field: &'static str, reason: String },

    /// Intensities do not satisfy 0 < nu < mu, so a bound denominator vanishes.
    #[error("degenerate intensities (mu = {mu}, nu = {nu}): {what} is not positive")]
    DegenerateIntensities { mu: f64, nu: f64, what: &'static str },

    /// The lower-bounded effective gain is zero, so the error-rate bound is vacuous.
    #[error("vacuous error-rate bound: effective gain lower bound is {q12_l}")]
    VacuousBound { q12_l: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("no secure key: {0}")]
    Insecure(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}
