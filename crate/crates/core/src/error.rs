use thiserror::Error;

/// Errors raised by the modeling, synthesis, identification and simulation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("matrix is not Hurwitz: eigenvalue {re:+.6}{im:+.6}i has nonnegative real part")]
    NotHurwitz { re: f64, im: f64 },

    #[error("Q must be symmetric positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),

    #[error("improper transfer function: numerator degree {num} exceeds denominator degree {den}")]
    Improper { num: usize, den: usize },

    #[error("frequency {omega} rad/s is at or above the Nyquist frequency {nyquist} rad/s")]
    AboveNyquist { omega: f64, nyquist: f64 },

    #[error("expected a {expected} system")]
    WrongTimeDomain { expected: &'static str },

    #[error("degenerate plant: {0}")]
    DegeneratePlant(String),

    #[error("kinematic singularity: |cos(theta)| = {cos_theta:.3e}")]
    KinematicSingularity { cos_theta: f64 },

    #[error("ill-conditioned data: {0}")]
    IllConditioned(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid graph: {0}")]
    Graph(String),

    #[error("scenario validation failed: {0}")]
    Validation(String),

    #[error("state diverged for agent {agent} at t = {time:.4} s")]
    Divergence { agent: usize, time: f64 },

    #[error("unknown experiment preset {0} (expected 1..=5)")]
    UnknownPreset(u32),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Parse(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
