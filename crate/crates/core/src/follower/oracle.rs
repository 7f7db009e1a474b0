//! Brute-force best response by enumerating all simple source-target paths.
//!
//! Only meant as a test oracle for small graphs; enumeration aborts once
//! 500 000 complete paths have been evaluated.

use crate::graph::{cost_weights, distances_to, EdgeId, Network, NodeId};
use crate::instance::InspectionStrategy;

use super::{adaptive_cost_with_dist, FollowerResult, ResponseModel, SolveError};

pub const ORACLE_PATH_LIMIT: usize = 500_000;

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("more than {limit} simple paths; instance too large for brute force")]
    GuardExceeded { limit: usize },
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Enumerates every simple path from `source` to `target` in edge-id order
/// and returns the cheapest one under the requested model (first one found
/// on ties). Also reports the number of complete paths visited.
pub fn brute_force_best_response(
    net: &Network,
    strategy: &InspectionStrategy,
    fine: f64,
    source: NodeId,
    target: NodeId,
    model: ResponseModel,
) -> Result<(FollowerResult, usize), OracleError> {
    let dist = distances_to(net, &cost_weights(net), target);
    let mut visited = vec![false; net.node_count()];
    visited[source] = true;
    let mut path: Vec<EdgeId> = Vec::new();
    let mut best: Option<(f64, Vec<EdgeId>)> = None;
    let mut count = 0usize;
    enumerate(
        net, strategy, fine, source, target, model, &dist, &mut visited, &mut path, &mut best,
        &mut count,
    )?;
    let (value, best_path) = best.ok_or(SolveError::Unreachable)?;
    let label = crate::graph::evaluate_path(net, strategy, &best_path)
        .expect("enumerated paths are contiguous");
    Ok((FollowerResult { path: best_path, value, label, model }, count))
}

#[allow(clippy::too_many_arguments)]
fn enumerate(
    net: &Network,
    strategy: &InspectionStrategy,
    fine: f64,
    node: NodeId,
    target: NodeId,
    model: ResponseModel,
    dist: &[f64],
    visited: &mut Vec<bool>,
    path: &mut Vec<EdgeId>,
    best: &mut Option<(f64, Vec<EdgeId>)>,
    count: &mut usize,
) -> Result<(), OracleError> {
    if node == target {
        *count += 1;
        if *count > ORACLE_PATH_LIMIT {
            return Err(OracleError::GuardExceeded { limit: ORACLE_PATH_LIMIT });
        }
        let value = match model {
            ResponseModel::NonAdaptive => {
                let label = crate::graph::evaluate_path(net, strategy, path)
                    .expect("enumerated paths are contiguous");
                label.cost + (1.0 - label.survival) * fine
            }
            ResponseModel::Adaptive => {
                adaptive_cost_with_dist(net, strategy, fine, path, dist)
                    .expect("enumerated paths are contiguous")
            }
        };
        if best.as_ref().is_none_or(|(v, _)| value < *v) {
            *best = Some((value, path.clone()));
        }
        return Ok(());
    }
    for &id in net.out_edges(node) {
        let head = net.edge(id).head;
        if visited[head] {
            continue;
        }
        visited[head] = true;
        path.push(id);
        enumerate(net, strategy, fine, head, target, model, dist, visited, path, best, count)?;
        path.pop();
        visited[head] = false;
    }
    Ok(())
}
