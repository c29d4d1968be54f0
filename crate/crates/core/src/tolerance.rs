//! Numerical tolerances shared by every module.
//!
//! All checks in the crate read their thresholds from here so a numerics
//! audit has a single place to look.

/// Hermiticity, positivity, trace, unit-norm and isometry checks.
pub const VALIDITY: f64 = 1e-10;

/// Reconstruction of a matrix from its eigendecomposition.
pub const RECONSTRUCTION: f64 = 1e-9;

/// Default residual accepted from the nonnegative factorization search.
pub const OPTIMIZATION: f64 = 1e-8;

/// Outcome probabilities at or below this are treated as impossible.
pub const NULL_PROBABILITY: f64 = 1e-12;

/// Input coherences at or below this make state-based ratios undefined.
pub const NULL_COHERENCE: f64 = 1e-12;

/// Slack allowed on conditional probabilities before clamping to `[0, 1]`.
pub const PROBABILITY_SLACK: f64 = 1e-12;

/// Default margin for declaring a steering violation.
pub const STEERING_MARGIN: f64 = 1e-9;

/// Runtime-adjustable copy of the tolerances above.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ToleranceConfig {
    pub validity: f64,
    pub reconstruction: f64,
    pub optimization: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            validity: VALIDITY,
            reconstruction: RECONSTRUCTION,
            optimization: OPTIMIZATION,
        }
    }
}
