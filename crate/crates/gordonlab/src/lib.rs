//! gordonlab: a numerical laboratory for absence of eigenvalues of
//! one-dimensional continuum Schrödinger operators H = -d²/dx² + V with
//! quasiperiodic potentials V(x) = V₁(x) + V₂(xα + θ).
//!
//! The toolkit verifies, at desk scale, every inequality in the L¹ Gordon
//! criterion pipeline:
//!
//! - [`exact`]: arbitrary-precision rationals, continued fractions,
//!   convergents p_m/q_m, and Liouville-number construction/certification.
//! - [`potential`]: 1-periodic sampling functions (step, trigonometric
//!   polynomial, power-singular), quasiperiodic compositions with exact
//!   rational phases, periodic approximants, oscillation integrals and
//!   uniform-local L¹ norms.
//! - [`propagate`]: solutions of -u'' + (W-E)u = 0 via exact
//!   piecewise-constant blocks or an adaptive integrator, monodromy
//!   matrices, and the three-point non-decay bound.
//! - [`gordon`]: the decay condition exp(C q_m)·∫|V₂(xα+θ) - V₂(xα_m+θ)|dx
//!   over [-q_m, 2q_m], exactly for step sampling, plus the oscillation and
//!   power-singularity upper bounds.
//! - [`witness`]: the Gronwall comparison of true and approximant solutions
//!   and emission of non-decay witness points.
//! - [`oracle`]: independent reference computations (dense Riemann sums,
//!   grid oscillation scans) used by the test suites; deliberately kept
//!   separate from the production code paths they cross-check.
//!
//! Phases xα + θ are reduced mod 1 in exact rational arithmetic throughout;
//! at interesting approximation orders |α - α_m| is far below double
//! resolution over the windows of interest, so floating-point phases would
//! be pure noise. Energies and potential values stay in f64.

pub mod error;
pub mod exact;
pub mod gordon;
pub mod oracle;
pub mod potential;
pub mod propagate;
mod quad;
pub mod witness;

pub use error::Error;
pub use exact::{BigRational, ContinuedFraction, DigitBudget, FrequencySpec};

/// Convenience result alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
