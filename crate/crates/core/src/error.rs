use thiserror::Error;

/// Errors raised by the sampler, the integrators and the verification lab.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("the exact Gaussian flow requires a Gaussian potential")]
    NotGaussian,

    #[error(
        "reference flow did not converge after {halvings} halvings (last change {last_change:e})"
    )]
    NotConverged { halvings: u32, last_change: f64 },

    #[error("Hessian is not positive definite (smallest eigenvalue {0:e})")]
    NotPositiveDefinite(f64),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("coupled chains start at the same point; no contraction rate to fit")]
    DegenerateCoupling,

    #[error("step-size search exhausted {halvings} halvings without reaching W1 <= {epsilon} at d = {dim}")]
    SearchExhausted {
        halvings: u32,
        epsilon: f64,
        dim: usize,
    },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
