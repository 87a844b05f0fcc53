//! Solver and check tolerances for the double-precision optimization layer.
//!
//! Everything here is a documented constant so tests and the CLI agree on
//! exactly one value per knob. Matrix-layer validation tolerances live on
//! [`crate::scalar::Scalar`] instead because they scale with the precision.

/// Central finite-difference step for numerically estimated gradients, both
/// in the ensemble optimizer and in the supergradient estimation of the
/// supporting-constraint search.
pub const FD_STEP: f64 = 1e-4;

/// Default objective-value tolerance: ascent stops improving below this.
pub const TOL_VALUE: f64 = 1e-9;

/// Default optimality-certificate tolerance in bits: a candidate is
/// converged iff its maximal-distance certificate gap is at most this.
pub const TOL_CERTIFICATE: f64 = 1e-3;

/// Feasibility slack for constrained averages in reported results.
pub const TOL_FEASIBILITY: f64 = 1e-8;

/// Complementary-slackness residual bound for Kuhn-Tucker multipliers.
pub const TOL_SLACKNESS: f64 = 1e-6;

/// Weights below this are pruned from reported ensembles.
pub const WEIGHT_PRUNE: f64 = 1e-8;

/// Ensemble members with squared overlap above 1 - this are merged.
pub const MERGE_FIDELITY: f64 = 1e-8;

/// Agreement required between the closed-form and the direct block-entropy
/// evaluation of the extension's chi before an internal-consistency error.
pub const TOL_DUAL_PATH: f64 = 1e-6;

/// Agreement required between the blockwise and the direct evaluation of
/// chi for direct-sum channels (the identity is exact).
pub const TOL_BLOCK_CHI: f64 = 1e-10;
