//! Numeric tolerances used across solvers and validators.

/// General comparison tolerance for costs, probabilities and objectives.
pub const VALUE_EPS: f64 = 1e-9;

/// Looser tolerance for first-order optimality checks on the relaxation
/// (potential constraints, objective consistency).
pub const LP_EPS: f64 = 1e-6;

/// Threshold below which an inspection probability does not count as
/// support.
pub const SUPPORT_EPS: f64 = 1e-6;

/// Slack admitted on `gap <= 1` checks; the bound itself is computed
/// numerically.
pub const GAP_EPS: f64 = 1e-6;
