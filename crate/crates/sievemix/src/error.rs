//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mixture weights sum to {sum} which is not within 1e-12 of 1")]
    WeightsNotNormalized { sum: f64 },

    #[error("scale parameter must be positive, got {0}")]
    NonPositiveScale(f64),

    #[error("sub-mixture selector invalid: {0}")]
    InvalidSelector(String),

    #[error("envelope derivation did not stabilize: {0}")]
    EnvelopeUnstable(String),

    #[error("family has no envelope constants; cannot certify a truncation window")]
    MissingEnvelope,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("initial parameters violate the scale floor: sigma[{index}] = {sigma} < {floor}")]
    InitBelowFloor {
        index: usize,
        sigma: f64,
        floor: f64,
    },

    #[error("operation unsupported for this family: {0}")]
    Unsupported(String),

    #[error("integrand is -infinity on a set of positive mass; a positive kappa is required")]
    KappaRequired,

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
