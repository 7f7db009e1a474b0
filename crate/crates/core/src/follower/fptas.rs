//! FPTAS for the non-adaptive best response.
//!
//! The objective `c(P) + (1 - pi(P)) * F` mixes an additive and a
//! multiplicative criterion. The scheme sweeps cost thresholds `C` in
//! geometric steps of `1 + eps'` with `(1 + eps')^2 <= 1 + eps` and, per
//! threshold, maximizes survival subject to `c(P) <= (1 + eps') * C` with a
//! rounding-and-scaling dynamic program over the additive weights
//! `w_e = -ln(1 - p_e)`. Always-inspected edges (`p_e = 1`, infinite
//! weight) are covered by a plain shortest-path candidate, which is optimal
//! among survival-zero paths. A zero-threshold pass (Dijkstra on `w` over
//! zero-cost edges) covers optima of cost exactly 0, so thresholds can be
//! anchored at the smallest positive edge cost and real-valued costs below
//! 1 are handled soundly.

use std::collections::BinaryHeap;

use crate::graph::{cost_weights, evaluate_path, shortest_paths_from, tree_path, EdgeId, Network, NodeId};
use crate::heap::MinEntry;
use crate::instance::InspectionStrategy;

use super::{FollowerResult, ResponseModel, SolveError};

#[derive(Debug, thiserror::Error)]
pub enum FptasError {
    #[error("epsilon must be positive, got {0}")]
    BadEpsilon(f64),
    #[error("epsilon {eps} needs a dynamic program with {cells} cells; refusing (limit {limit})")]
    EpsilonTooSmall { eps: f64, cells: usize, limit: usize },
    #[error(transparent)]
    Solve(#[from] SolveError),
}

const DP_CELL_LIMIT: usize = 10_000_000;

/// Returns a path whose non-adaptive cost is at most `(1 + epsilon)` times
/// the optimum.
pub fn solve_nonadaptive_fptas(
    net: &Network,
    strategy: &InspectionStrategy,
    fine: f64,
    source: NodeId,
    target: NodeId,
    epsilon: f64,
) -> Result<FollowerResult, FptasError> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(FptasError::BadEpsilon(epsilon));
    }
    let n = net.node_count();
    let eps_prime = (1.0 + epsilon).sqrt() - 1.0;
    let budget = n as f64 / eps_prime + n as f64;
    if budget * n as f64 > DP_CELL_LIMIT as f64 {
        return Err(FptasError::EpsilonTooSmall {
            eps: epsilon,
            cells: (budget * n as f64) as usize,
            limit: DP_CELL_LIMIT,
        });
    }

    let weights: Vec<f64> = (0..net.edge_count())
        .map(|e| -(1.0 - strategy.p(e)).ln())
        .collect();

    let mut candidates: Vec<Vec<EdgeId>> = Vec::new();

    // Zero-cost pass: most-likely-to-survive path among free edges.
    if let Some(path) = max_survival_zero_cost(net, &weights, source, target) {
        candidates.push(path);
    }

    // Geometric thresholds from the smallest positive edge cost up to an
    // upper bound on any simple path cost.
    let lo = net
        .edges()
        .iter()
        .map(|e| e.cost)
        .filter(|&c| c > 0.0)
        .fold(f64::INFINITY, f64::min);
    if lo.is_finite() {
        let hi = net.edges().iter().map(|e| e.cost).fold(0.0, f64::max) * n as f64;
        let steps = ((hi / lo).ln() / (1.0 + eps_prime).ln()).ceil().max(0.0) as usize;
        let mut threshold = lo;
        for _ in 0..=steps {
            if let Some(path) =
                restricted_max_survival(net, &weights, source, target, threshold, eps_prime)
            {
                candidates.push(path);
            }
            threshold *= 1.0 + eps_prime;
        }
    }

    // Plain shortest path: optimal whenever the best path never survives.
    let (dist, parent) = shortest_paths_from(net, &cost_weights(net), source);
    if !dist[target].is_finite() {
        return Err(SolveError::Unreachable.into());
    }
    candidates.push(tree_path(net, &parent, source, target).expect("target is reachable"));

    let mut best: Option<FollowerResult> = None;
    for path in candidates {
        let label = evaluate_path(net, strategy, &path).expect("candidates are contiguous");
        let value = label.cost + (1.0 - label.survival) * fine;
        if best.as_ref().is_none_or(|b| value < b.value) {
            best = Some(FollowerResult { path, value, label, model: ResponseModel::NonAdaptive });
        }
    }
    Ok(best.expect("at least the shortest-path candidate exists"))
}

/// Maximizes survival over paths that only use zero-cost edges.
fn max_survival_zero_cost(
    net: &Network,
    weights: &[f64],
    source: NodeId,
    target: NodeId,
) -> Option<Vec<EdgeId>> {
    let mut dist = vec![f64::INFINITY; net.node_count()];
    let mut parent: Vec<Option<EdgeId>> = vec![None; net.node_count()];
    dist[source] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(MinEntry::new(0.0, source, source));
    while let Some(entry) = heap.pop() {
        let v = entry.item;
        if entry.key > dist[v] {
            continue;
        }
        for &id in net.out_edges(v) {
            let e = net.edge(id);
            if e.cost != 0.0 {
                continue;
            }
            let cand = dist[v] + weights[id];
            if cand < dist[e.head] {
                dist[e.head] = cand;
                parent[e.head] = Some(id);
                heap.push(MinEntry::new(cand, e.head, e.head));
            }
        }
    }
    if dist[target].is_finite() {
        tree_path(net, &parent, source, target)
    } else {
        None
    }
}

/// Scaled DP: maximizes survival over paths with `c(P) <= (1 + eps') * C`,
/// matching at least the best survival among paths with `c(P) <= C`.
///
/// Scaled edge costs `floor(c_e / delta) + 1` with `delta = eps' * C / n`
/// make every edge cost at least one unit, so walks in the DP have at most
/// `budget` edges and true cost at most `delta * budget <= (1 + eps') * C`,
/// while any simple path with `c(P) <= C` still fits the budget.
fn restricted_max_survival(
    net: &Network,
    weights: &[f64],
    source: NodeId,
    target: NodeId,
    threshold: f64,
    eps_prime: f64,
) -> Option<Vec<EdgeId>> {
    let n = net.node_count();
    let delta = eps_prime * threshold / n as f64;
    let budget = (n as f64 / eps_prime).floor() as usize + n - 1;
    let scaled: Vec<usize> = net
        .edges()
        .iter()
        .map(|e| {
            let s = (e.cost / delta).floor();
            if s >= budget as f64 {
                budget + 1 // unusable at this threshold
            } else {
                s as usize + 1
            }
        })
        .collect();

    let inf = f64::INFINITY;
    // dp[j][v]: min total weight over walks with scaled cost <= j.
    let mut dp = vec![vec![inf; n]; budget + 1];
    // Predecessor per cell: edge taken into this cell, if any. A cell
    // without an edge inherits from the previous level.
    let mut from: Vec<Vec<Option<EdgeId>>> = vec![vec![None; n]; budget + 1];
    dp[0][source] = 0.0;
    for j in 1..=budget {
        for v in 0..n {
            dp[j][v] = dp[j - 1][v];
        }
        for e in net.edges() {
            if scaled[e.id] > j {
                continue;
            }
            let cand = dp[j - scaled[e.id]][e.tail] + weights[e.id];
            if cand < dp[j][e.head] {
                dp[j][e.head] = cand;
                from[j][e.head] = Some(e.id);
            }
        }
    }
    if !dp[budget][target].is_finite() {
        return None;
    }
    // Reconstruct by walking levels down; `None` means "inherited".
    let mut path = Vec::new();
    let mut j = budget;
    let mut v = target;
    while v != source || dp[j][v] != 0.0 {
        match from[j][v] {
            Some(id) => {
                path.push(id);
                j -= scaled[id];
                v = net.edge(id).tail;
            }
            None => {
                debug_assert!(j > 0, "stuck reconstructing DP path");
                j -= 1;
            }
        }
    }
    path.reverse();
    Some(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::follower::solve_nonadaptive_exact;
    use crate::instance::samples::parallel_arcs;

    #[test]
    fn rejects_bad_epsilon() {
        let (inst, strategy) = parallel_arcs();
        assert!(matches!(
            solve_nonadaptive_fptas(&inst.network, &strategy, inst.fine, 0, 2, 0.0),
            Err(FptasError::BadEpsilon(_))
        ));
        assert!(matches!(
            solve_nonadaptive_fptas(&inst.network, &strategy, inst.fine, 0, 2, -1.0),
            Err(FptasError::BadEpsilon(_))
        ));
    }

    #[test]
    fn within_ratio_on_parallel_arcs() {
        let (inst, strategy) = parallel_arcs();
        let exact = solve_nonadaptive_exact(&inst.network, &strategy, inst.fine, 0, 2).unwrap();
        for eps in [0.05, 0.1, 0.5] {
            let res =
                solve_nonadaptive_fptas(&inst.network, &strategy, inst.fine, 0, 2, eps).unwrap();
            assert!(
                res.value <= (1.0 + eps) * exact.result.value + 1e-9,
                "eps={eps}: {} vs {}",
                res.value,
                exact.result.value
            );
        }
    }

    #[test]
    fn no_inspection_matches_shortest_path_exactly() {
        let (inst, _) = parallel_arcs();
        let zero = InspectionStrategy::zeros(inst.network.edge_count());
        let res = solve_nonadaptive_fptas(&inst.network, &zero, inst.fine, 0, 2, 0.1).unwrap();
        assert_eq!(res.value, 0.0);
    }
}
