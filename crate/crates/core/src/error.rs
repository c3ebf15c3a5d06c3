//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate metric: alpha*lambda = 0")]
    DegenerateMetric,

    #[error("step size underflow at t = {t} (h = {h})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("non-finite state encountered at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("closed-form branch unavailable: {0}")]
    BranchDomainError(String),

    #[error("quadrature domain error: {0}")]
    DomainError(String),

    #[error("quadrature did not converge: {0}")]
    NonConvergence(String),

    #[error("no sign change on bracket [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("root finding failed to converge: {0}")]
    ConvergenceError(String),

    #[error("branch ambiguity: {0}")]
    BranchAmbiguity(String),

    #[error("reconstruction inconsistency: {0}")]
    ReconstructionInconsistency(String),

    #[error("point is not on the a = 0 stratum (|a| = {a})")]
    NotOnStratum { a: f64 },

    #[error("singular 2x2 matrix A")]
    SingularA,

    #[error("singular cotangent point (q and eta^-1 p dependent)")]
    SingularPoint,

    #[error("singular solve in fiber reconstruction: {0}")]
    SingularSolve(String),

    #[error("signature {signature} inconsistent with level s = {s}")]
    InconsistentInput { s: f64, signature: String },

    #[error("point is off the quadric constraint set: {0}")]
    OffConstraint(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
