//! Error type shared by every module in the crate.

use thiserror::Error;

/// Errors produced by numeric kernels, residue expansions, posterior
/// constructors, and samplers.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested density is not integrable on (0, inf).
    #[error("not integrable: {0}")]
    NotIntegrable(String),

    /// Two denominator poles coincide (or nearly coincide), so the
    /// simple-root expansion does not apply. Callers can perturb the prior
    /// offset `a`, or use the double-root posterior when the prior has the
    /// colliding form a = 0, c = K.
    #[error("pole collision between {0} and {1}; perturb `a` or use the double-root posterior")]
    PoleCollision(f64, f64),

    /// A pole of order above two appeared; the residue machinery covers
    /// orders 1-2 only. Callers fall back to quadrature normalization.
    #[error("pole at {location} has order {order}; residue expansion supports orders 1-2")]
    UnsupportedPoleOrder { location: f64, order: u32 },

    /// The requested moment exceeds the number of finite moments.
    #[error("moment of order {k} does not exist (distribution has {available} finite moments)")]
    MomentDoesNotExist { k: u32, available: i64 },

    /// The normalizer sum cancelled beyond the working precision and no
    /// fallback was permitted.
    #[error("residue normalizer lost {cancellation_nats:.1} nats to cancellation (threshold {threshold_nats:.1})")]
    PrecisionLoss {
        cancellation_nats: f64,
        threshold_nats: f64,
    },

    /// Adaptive quadrature exhausted its subdivision budget.
    #[error("quadrature did not reach tolerance {tol:e} within {panels} panels")]
    QuadratureBudget { tol: f64, panels: usize },

    /// The expansion exceeded the configured exact-path size budget.
    #[error("expansion size {size} exceeds the exact-path budget {budget}")]
    SizeBudget { size: usize, budget: usize },

    /// A chain had no retained draws.
    #[error("chain is empty after burn-in")]
    EmptyChain,

    /// Array or matrix dimensions disagree.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// An allelic partition failed its consistency checks.
    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    /// Malformed input data (CSV, JSON, or rational strings).
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
