use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SubCirError {
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    #[error("overflow in {op}")]
    Overflow { op: &'static str },

    #[error("invalid parameter `{name}`: {msg}")]
    InvalidParameter { name: &'static str, msg: String },

    #[error("time {t} is below the resolution floor t_min = {t_min}")]
    BelowResolution { t: f64, t_min: f64 },

    #[error("eigenfunction expansion did not converge within {n_max} terms")]
    SlowConvergence { n_max: usize },

    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e} after {evaluations} evaluations")]
    QuadratureNonConvergence {
        estimate: f64,
        error: f64,
        evaluations: usize,
    },

    #[error("quadrature node construction failed: {0}")]
    QuadratureDegenerate(String),

    #[error("no exact sampler for tempered-stable index alpha = {alpha}")]
    UnsupportedAlpha { alpha: f64 },

    #[error("background horizon exceeded the cap of {cap} years")]
    CapExceeded { cap: f64 },

    #[error("survival probability underflowed to zero at horizon {horizon}")]
    InfiniteSpread { horizon: f64 },
}

pub type Result<T> = std::result::Result<T, SubCirError>;
