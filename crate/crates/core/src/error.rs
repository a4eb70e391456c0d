//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by model construction, filtering, and estimation.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A model specification failed validation; each entry names one
    /// violated invariant.
    #[error("invalid model: {}", .0.join("; "))]
    InvalidModel(Vec<String>),

    /// Dimensions of an input do not match the model.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The data contain a non-finite or otherwise unusable value.
    #[error("invalid series: {0}")]
    InvalidSeries(String),

    /// Parameter vector construction failed.
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    /// The innovation variance became non-positive or non-finite at
    /// step `step` (1-based).
    #[error("filter diverged at step {step}: {detail}")]
    FilterDivergence { step: usize, detail: String },

    /// A derivative quantity became non-finite during the recursion.
    #[error("non-finite derivative at step {step} for parameter {param}")]
    NonFiniteDerivative { step: usize, param: usize },

    /// A covariance needed for simulation is not positive semidefinite.
    #[error("{name} is not positive semidefinite (eigenvalue {eigenvalue:e})")]
    NotPositiveSemidefinite { name: &'static str, eigenvalue: f64 },

    /// The joint covariance of the dense likelihood oracle is singular.
    #[error("singular joint covariance in dense log-likelihood")]
    SingularCovariance,

    /// The dense likelihood oracle is restricted to short series.
    #[error("series too long for the dense oracle: {n} > {max}")]
    SeriesTooLong { n: usize, max: usize },

    /// A finite-difference evaluation failed or returned a non-finite
    /// value while perturbing parameter `param`.
    #[error("non-finite evaluation while differencing parameter {param}")]
    NonFiniteEvaluation { param: usize },

    /// Every start of a multi-start optimization failed.
    #[error("all {0} optimization starts failed")]
    AllStartsFailed(usize),

    /// Scores or Hessian handed to the criteria layer are not finite.
    #[error("non-finite input to information criteria: {0}")]
    NonFiniteCriteriaInput(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
