//! Exact non-adaptive best response via bi-criteria label setting.
//!
//! Labels are (cost, survival) pairs. A label is dominated if another label
//! at the same node is at most as expensive and at least as likely to
//! survive. The objective `c + (1 - pi) * F` is nondecreasing along path
//! extensions, so labels can be settled in objective order and every
//! extension that returns to an already-visited node is dominated by its
//! own ancestor there; the enumeration therefore terminates with one label
//! per nondominated simple path.

use std::collections::BinaryHeap;

use crate::graph::{EdgeId, Network, NodeId, PathLabel};
use crate::heap::MinEntry;
use crate::instance::InspectionStrategy;
use crate::tol::VALUE_EPS;

use super::{FollowerResult, ResponseModel, SolveError};

#[derive(Debug, Clone)]
pub struct NonAdaptiveSolution {
    pub result: FollowerResult,
    /// Nondominated (cost, survival) labels at the target, an antichain.
    /// With pruning enabled only labels tied with the optimum survive.
    pub frontier: Vec<PathLabel>,
}

#[derive(Debug, Clone)]
struct Label {
    cost: f64,
    survival: f64,
    parent: Option<(NodeId, usize)>,
    edge: Option<EdgeId>,
}

/// Exact solver returning the full nondominated frontier at the target.
pub fn solve_nonadaptive_exact(
    net: &Network,
    strategy: &InspectionStrategy,
    fine: f64,
    source: NodeId,
    target: NodeId,
) -> Result<NonAdaptiveSolution, SolveError> {
    nonadaptive_frontier(net, strategy, fine, source, target, None)
}

/// Label-setting enumeration. `incumbent` enables bound pruning: labels
/// whose objective already exceeds `min(incumbent, best found so far)` plus
/// a tolerance are discarded, which keeps every label tied with the optimum
/// but drops the rest of the frontier.
pub fn nonadaptive_frontier(
    net: &Network,
    strategy: &InspectionStrategy,
    fine: f64,
    source: NodeId,
    target: NodeId,
    incumbent: Option<f64>,
) -> Result<NonAdaptiveSolution, SolveError> {
    let prune = incumbent.is_some();
    let mut bound = incumbent.unwrap_or(f64::INFINITY);
    // Settled antichains per node.
    let mut labels: Vec<Vec<Label>> = vec![Vec::new(); net.node_count()];
    let mut heap: BinaryHeap<MinEntry<Label>> = BinaryHeap::new();
    let mut seq = 0usize;
    heap.push(MinEntry::new(
        0.0,
        seq,
        Label { cost: 0.0, survival: 1.0, parent: None, edge: None },
    ));
    while let Some(entry) = heap.pop() {
        let label = entry.item;
        let node = match label.edge {
            Some(e) => net.edge(e).head,
            None => source,
        };
        if prune && entry.key > bound + VALUE_EPS {
            continue;
        }
        if labels[node]
            .iter()
            .any(|l| l.cost <= label.cost && l.survival >= label.survival)
        {
            continue;
        }
        labels[node].push(label.clone());
        let label_index = labels[node].len() - 1;
        if node == target {
            bound = bound.min(entry.key);
            continue;
        }
        for &id in net.out_edges(node) {
            let e = net.edge(id);
            let cost = label.cost + e.cost;
            let survival = label.survival * (1.0 - strategy.p(id));
            let objective = cost + (1.0 - survival) * fine;
            if prune && objective > bound + VALUE_EPS {
                continue;
            }
            seq += 1;
            heap.push(MinEntry::new(
                objective,
                seq,
                Label { cost, survival, parent: Some((node, label_index)), edge: Some(id) },
            ));
        }
    }
    if labels[target].is_empty() {
        return Err(SolveError::Unreachable);
    }
    let frontier: Vec<PathLabel> = labels[target]
        .iter()
        .map(|l| PathLabel { cost: l.cost, survival: l.survival, path: reconstruct(&labels, l) })
        .collect();
    // Settling order is by objective, so the first target label is optimal.
    let best = &frontier[0];
    let value = best.cost + (1.0 - best.survival) * fine;
    Ok(NonAdaptiveSolution {
        result: FollowerResult {
            path: best.path.clone(),
            value,
            label: best.clone(),
            model: ResponseModel::NonAdaptive,
        },
        frontier,
    })
}

fn reconstruct(labels: &[Vec<Label>], label: &Label) -> Vec<EdgeId> {
    let mut path = Vec::new();
    let mut cur = label.clone();
    while let Some(edge) = cur.edge {
        path.push(edge);
        let (node, idx) = cur.parent.expect("labels with an edge have a parent");
        cur = labels[node][idx].clone();
    }
    path.reverse();
    path
}
