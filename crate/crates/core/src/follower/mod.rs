//! Passenger best-response solvers.
//!
//! An evading passenger travelling from s to t pays edge costs plus expected
//! fines. Two behavioural models:
//!
//! * non-adaptive: the passenger commits to a path P upfront and pays
//!   `c(P) + (1 - pi(P)) * F`, where `pi(P)` is the probability of never
//!   being inspected along P;
//! * adaptive: after the first inspection the passenger is ticketed for the
//!   rest of the trip and continues along a cheapest path, so inspection
//!   probabilities stop mattering from that point on.
//!
//! Solvers: exact bi-criteria enumeration and an FPTAS for the non-adaptive
//! model, a dedicated exact solver for two-terminal series-parallel graphs,
//! a Dijkstra-like exact solver for the adaptive model, and a brute-force
//! oracle used for testing.

mod adaptive;
mod fptas;
mod oracle;
mod pareto;
mod series_parallel;

use serde::{Deserialize, Serialize};

pub(crate) use adaptive::follower_result_from_labels;
pub use adaptive::{adaptive_labels, solve_adaptive, AdaptiveLabels};
pub use fptas::{solve_nonadaptive_fptas, FptasError};
pub use oracle::{brute_force_best_response, OracleError};
pub use pareto::{nonadaptive_frontier, solve_nonadaptive_exact, NonAdaptiveSolution};
pub use series_parallel::{
    solve_nonadaptive_sp, sp_candidates, sp_decompose, SpCandidate, SpError, SpTree,
};

use crate::graph::{distances_to, evaluate_path, EdgeId, Network, PathError, PathLabel};
use crate::instance::InspectionStrategy;

/// Passenger behaviour against which the leader optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResponseModel {
    NonAdaptive,
    Adaptive,
}

impl std::fmt::Display for ResponseModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ResponseModel::NonAdaptive => write!(f, "n"),
            ResponseModel::Adaptive => write!(f, "a"),
        }
    }
}

/// Best response of one evading passenger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FollowerResult {
    pub path: Vec<EdgeId>,
    /// Expected cost of the response under the queried model.
    pub value: f64,
    /// Cost and survival of the returned path.
    pub label: PathLabel,
    pub model: ResponseModel,
}

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error("target is unreachable from source")]
    Unreachable,
    #[error(transparent)]
    Path(#[from] PathError),
}

/// Expected cost of committing to `path`: `c(P) + (1 - pi(P)) * fine`.
pub fn nonadaptive_cost(
    net: &Network,
    strategy: &InspectionStrategy,
    fine: f64,
    path: &[EdgeId],
) -> Result<f64, PathError> {
    let label = evaluate_path(net, strategy, path)?;
    Ok(label.cost + (1.0 - label.survival) * fine)
}

/// Expected cost of walking `path` while re-routing to a cheapest path
/// towards `target` as soon as an inspection happens:
///
/// `sum_i prod_{j<i} (1 - p_j) * (c_i + p_i * (fine + d(head_i, target)))`
///
/// where `d` is the shortest-path distance under edge costs. The walk does
/// not have to end at `target`; prefixes of longer walks evaluate the same
/// telescoping sum, which is what the decomposition tests rely on.
pub fn adaptive_cost(
    net: &Network,
    strategy: &InspectionStrategy,
    fine: f64,
    path: &[EdgeId],
    target: usize,
) -> Result<f64, PathError> {
    let dist = distances_to(net, &crate::graph::cost_weights(net), target);
    adaptive_cost_with_dist(net, strategy, fine, path, &dist)
}

/// [`adaptive_cost`] with precomputed distances to the target.
pub fn adaptive_cost_with_dist(
    net: &Network,
    strategy: &InspectionStrategy,
    fine: f64,
    path: &[EdgeId],
    dist_to_target: &[f64],
) -> Result<f64, PathError> {
    // Validates contiguity and edge ids.
    evaluate_path(net, strategy, path)?;
    let mut total = 0.0;
    let mut survival = 1.0;
    for &id in path {
        let e = net.edge(id);
        let p = strategy.p(id);
        total += survival * (e.cost + p * (fine + dist_to_target[e.head]));
        survival *= 1.0 - p;
    }
    Ok(total)
}
