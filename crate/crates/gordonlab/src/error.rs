//! Error type shared by all modules.

use thiserror::Error;

/// Crate-wide error enum. Variants map onto the CLI exit-code contract:
/// `Resource` exits 3, `Invariant` exits 2, everything else exits 1.
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Index or order outside the available range.
    #[error("range error: {0}")]
    Range(String),

    /// A configured work or digit budget would be exceeded.
    #[error("resource budget exceeded at m={m}: needs ~{needed} {unit}, budget {budget}")]
    Resource {
        m: usize,
        needed: u64,
        budget: u64,
        unit: &'static str,
    },

    /// Evaluation landed exactly on a lattice point of a power singularity.
    /// Callers integrate across singularities with closed-form
    /// antiderivatives instead of sampling them.
    #[error("singularity hit at x={x}")]
    SingularityHit { x: String },

    /// The adaptive integrator could not shrink the step any further.
    #[error("step size underflow near x={x}")]
    StepUnderflow { x: f64 },

    /// A propagated state became non-finite.
    #[error("numerical blowup; last good x={x}")]
    Blowup { x: f64 },

    /// An identity the theory guarantees failed its tolerance. Always names
    /// the invariant and carries the offending inputs.
    #[error("invariant violated [{name}]: {details}")]
    Invariant { name: &'static str, details: String },

    /// Operation not covered by the implemented theory (e.g. the singular
    /// analytic bound for θ ≠ 0).
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Malformed textual input (rationals, DSL fragments).
    #[error("parse error: {0}")]
    Parse(String),
}
