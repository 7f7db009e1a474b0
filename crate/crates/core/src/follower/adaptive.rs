//! Exact adaptive best response.
//!
//! `phi(v)` is the optimal expected cost from `v` to the target for a
//! passenger who, once inspected, pays the fine and finishes the trip along
//! a cheapest path. Relaxing an edge e = (v, w):
//!
//! `phi'(v) = c_e + p_e * (fine + d(w)) + (1 - p_e) * phi(w)`
//!
//! where `d` is the plain shortest-path distance to the target. All terms
//! are nonnegative and `phi` only depends on already-settled successors, so
//! nodes can be settled in increasing `phi` like in Dijkstra's algorithm.

use std::collections::BinaryHeap;

use crate::graph::{cost_weights, distances_to, evaluate_path, EdgeId, Network, NodeId};
use crate::heap::MinEntry;
use crate::instance::InspectionStrategy;

use super::{FollowerResult, ResponseModel, SolveError};

#[derive(Debug, Clone)]
pub struct AdaptiveLabels {
    /// Optimal expected adaptive cost to the target, per node; infinite
    /// where the target is unreachable.
    pub phi: Vec<f64>,
    /// First edge of an optimal policy, per node.
    pub next_edge: Vec<Option<EdgeId>>,
    /// Nodes in the order they were settled.
    pub settle_order: Vec<NodeId>,
    /// Shortest-path distances to the target under edge costs.
    pub dist_to_target: Vec<f64>,
}

/// Computes `phi`, the optimal policy pointers and the settling order for
/// every node that can reach `target`. Ties are settled on the lowest node
/// index.
pub fn adaptive_labels(
    net: &Network,
    strategy: &InspectionStrategy,
    fine: f64,
    target: NodeId,
) -> AdaptiveLabels {
    let dist_to_target = distances_to(net, &cost_weights(net), target);
    let n = net.node_count();
    let mut phi = vec![f64::INFINITY; n];
    let mut next_edge: Vec<Option<EdgeId>> = vec![None; n];
    let mut settled = vec![false; n];
    let mut settle_order = Vec::new();
    let mut heap = BinaryHeap::new();
    phi[target] = 0.0;
    heap.push(MinEntry::new(0.0, target, target));
    while let Some(entry) = heap.pop() {
        let w = entry.item;
        if settled[w] || entry.key > phi[w] {
            continue;
        }
        settled[w] = true;
        settle_order.push(w);
        for &id in net.in_edges(w) {
            let e = net.edge(id);
            if settled[e.tail] {
                continue;
            }
            let p = strategy.p(id);
            let cand = e.cost + p * (fine + dist_to_target[w]) + (1.0 - p) * phi[w];
            if cand < phi[e.tail] {
                phi[e.tail] = cand;
                next_edge[e.tail] = Some(id);
                heap.push(MinEntry::new(cand, e.tail, e.tail));
            }
        }
    }
    AdaptiveLabels { phi, next_edge, settle_order, dist_to_target }
}

/// Optimal adaptive response for one source-target pair. The returned path
/// is the route the passenger commits to while uninspected; `value` is
/// `phi(source)`.
pub fn solve_adaptive(
    net: &Network,
    strategy: &InspectionStrategy,
    fine: f64,
    source: NodeId,
    target: NodeId,
) -> Result<FollowerResult, SolveError> {
    let labels = adaptive_labels(net, strategy, fine, target);
    follower_result_from_labels(net, strategy, &labels, source, target)
}

/// Unrolls the policy of precomputed labels into a concrete path.
pub(crate) fn follower_result_from_labels(
    net: &Network,
    strategy: &InspectionStrategy,
    labels: &AdaptiveLabels,
    source: NodeId,
    target: NodeId,
) -> Result<FollowerResult, SolveError> {
    if !labels.phi[source].is_finite() {
        return Err(SolveError::Unreachable);
    }
    let mut path = Vec::new();
    let mut cur = source;
    while cur != target {
        let id = labels.next_edge[cur].expect("finite phi implies a policy edge");
        path.push(id);
        cur = net.edge(id).head;
        debug_assert!(path.len() <= net.node_count(), "policy pointers must not cycle");
    }
    let label = evaluate_path(net, strategy, &path)?;
    Ok(FollowerResult {
        path,
        value: labels.phi[source],
        label,
        model: ResponseModel::Adaptive,
    })
}
