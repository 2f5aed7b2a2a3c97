//! Error type shared across the library.
//!
//! Every fallible operation returns `Result<_, EvofamError>`. Variants carry
//! enough context to report the offending quantity without a backtrace.

use thiserror::Error;

/// Unified error for construction, validation, and solver failures.
#[derive(Debug, Error)]
pub enum EvofamError {
    /// A mode index must be a positive integer.
    #[error("mode index must be >= 1, got {0}")]
    InvalidModeIndex(usize),

    /// Truncation must retain at least one mode.
    #[error("truncation must be >= 1, got {0}")]
    InvalidTruncation(usize),

    /// Time grid parameters out of range.
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    /// The wave-speed coefficient must be strictly positive everywhere;
    /// the oscillation frequency n·sqrt(alpha(t)) is meaningless otherwise.
    #[error("alpha must be positive on [0,T]: min sampled value {min} at t={at}")]
    NonPositiveAlpha { min: f64, at: f64 },

    /// Config-level constraint: alpha(t) >= 1 on the whole horizon.
    #[error("alpha violates alpha >= 1: min sampled value {min} at t={at}")]
    AlphaBelowOne { min: f64, at: f64 },

    /// A structured configuration error naming the offending key.
    #[error("config error at key '{key}': {reason}")]
    Config { key: String, reason: String },

    /// A time that must coincide with a grid node does not.
    #[error("time {t} is not a grid node (nearest node {nearest})")]
    NotAGridNode { t: f64, nearest: f64 },

    /// Evaluation requested outside the ordered domain t >= s.
    #[error("requested t index {t_idx} < base index {s_idx} (domain requires t >= s)")]
    EmptyInterval { t_idx: usize, s_idx: usize },

    /// A vector carried the wrong space tag for the operation.
    #[error("space tag mismatch: operation requires {required}, vector is tagged {actual}")]
    SpaceTag {
        required: &'static str,
        actual: &'static str,
    },

    /// Dimension mismatch between a vector or matrix and the truncation.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// Fixed-point iteration failed to contract within the iteration cap.
    #[error("Picard iteration did not converge in {iterations} iterations (last increment {last_increment:.3e})")]
    PicardDivergence {
        iterations: usize,
        last_increment: f64,
    },

    /// A requested propagator column is missing from a field.
    #[error("propagator column for base node {s_idx} is not materialized")]
    MissingColumn { s_idx: usize },

    /// Power iteration for an operator norm failed to settle.
    #[error("operator-norm power iteration did not converge in {iterations} iterations")]
    OpNormDivergence { iterations: usize },

    /// The adaptive reference integrator drove its step below the useful
    /// floor without meeting the error target.
    #[error("adaptive step underflow at t={t} (step {h:.3e})")]
    AdaptiveStepUnderflow { t: f64, h: f64 },
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, EvofamError>;
