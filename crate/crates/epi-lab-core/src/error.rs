//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("covariance matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("atom mass must lie in (0,1], got {0}")]
    InvalidAtomMass(f64),

    #[error("duplicate atom location {0:?}")]
    DuplicateAtom(Vec<f64>),

    #[error("atom masses plus density mass must sum to 1, got {0}")]
    MassMismatch(f64),

    #[error("scale factor must be nonzero")]
    ZeroScale,

    #[error("distribution has no absolutely continuous part")]
    NoDensity,

    #[error("integrand is non-finite at {point:?}")]
    NonFiniteIntegrand { point: Vec<f64> },

    #[error("all Monte Carlo samples produced non-finite integrand values")]
    AllSamplesNonFinite,

    #[error("inner integral failed at panel (x={x:?}, y={y:?}): {source}")]
    InnerIntegral {
        x: Vec<f64>,
        y: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("output density underflows at y={y:?}; point lies outside the effective support")]
    DenominatorUnderflow { y: Vec<f64> },

    #[error("residuals are dominated by quadrature noise ({usable} usable of {total} sweep points); tighten the quadrature tolerances")]
    NoiseFloor { usable: usize, total: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
