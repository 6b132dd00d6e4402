//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or grid parameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// A norm or functional was asked for outside its domain of validity
    /// (e.g. a negative radial weight on a grid touching the axis with a
    /// field that does not vanish there).
    #[error("domain error: {0}")]
    Domain(String),

    /// A lemma hypothesis was violated by the supplied data.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    /// The stream-function gauge is under- or over-determined.
    #[error("gauge error: {0}")]
    Gauge(String),

    /// A linear solve failed (singular or ill-conditioned band).
    #[error("solver failure: {0}")]
    Solve(String),

    /// NaN/Inf detected during time integration.
    #[error("blow-up detected at t={t}: {what}")]
    BlowUp { t: f64, what: String },

    /// A monitor accumulator needed by a functional was never recorded.
    #[error("missing accumulator: {0}")]
    MissingAccumulator(String),

    /// Eigenvalue iteration did not converge within its cap.
    #[error("eigen-iteration failed to converge after {0} iterations")]
    EigenNonConvergence(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
