//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by bdpkit operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown model \"{given}\"; valid labels are: {valid}")]
    UnknownModel { given: String, valid: String },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("rate function returned a non-finite value at state {state}: {value}")]
    NonFiniteRate { state: u64, value: f64 },

    #[error("matrix dimension {n} exceeds the supported maximum of {max} states")]
    DimensionTooLarge { n: usize, max: usize },

    #[error("continued fraction did not converge after {terms} terms")]
    LentzNoConvergence { terms: usize },

    #[error("Laplace transform evaluation failed at inversion node {node}: {reason}")]
    LaplaceNode { node: usize, reason: String },

    #[error("singular linear system: {0}")]
    SingularMatrix(String),

    #[error("no asymptotically stable equilibrium exists for this model; try another probability method such as \"da\" or \"expm\"")]
    NoStableEquilibrium,

    #[error("survival conditioning failed: {attempts} rejection attempts exhausted")]
    SurvivalAttemptsExceeded { attempts: u64 },

    #[error("likelihood is zero (or undefined) at the initial guess: {0}")]
    ZeroLikelihood(String),

    #[error("zero denominator in closed-form estimator: {0}")]
    ZeroDenominator(String),

    #[error("transition probability is zero for observed transition {z_prev} -> {z_next} over elapsed time {dt}")]
    ZeroTransitionProbability { z_prev: u64, z_next: u64, dt: f64 },

    #[error("ABC accepted no proposals within the {budget}-proposal budget; smallest distance seen was {smallest}")]
    AbcNoAcceptance { budget: u64, smallest: f64 },

    #[error("rejection sampling budget exhausted: {0}")]
    RejectionBudget(String),

    #[error("framework \"{framework}\" does not support the \"{scheme}\" observation scheme")]
    IncompatibleScheme { framework: String, scheme: String },

    #[error("all parameters are marked as known; nothing to estimate")]
    NothingToEstimate,

    #[error("estimation failed: {0}")]
    EstimationFailed(String),

    #[error("data error: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, Error>;
