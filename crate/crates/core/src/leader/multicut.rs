//! Directed multicut warm start.
//!
//! A multicut is an edge set whose removal separates every commodity's
//! source from its target. Spreading the budget uniformly over a small
//! multicut inspects every possible evasion route with positive
//! probability, which makes it a useful starting point for local search
//! and, with enough budget, catches every passenger with probability one.

use crate::graph::{cost_weights, EdgeId, Network, NodeId};
use crate::heap::MinEntry;
use crate::instance::{InspectionStrategy, Instance};

use std::collections::BinaryHeap;

/// A small multicut: exact minimum cardinality (branch and bound) on
/// networks with at most 25 edges, greedy otherwise.
pub fn multicut_edges(instance: &Instance) -> Vec<EdgeId> {
    if instance.commodities.is_empty() {
        return Vec::new();
    }
    if instance.network.edge_count() <= 25 {
        exact_multicut(instance)
    } else {
        greedy_multicut(instance)
    }
}

/// Uniform budget split over a multicut: `p_e = min(1, B / |M|)`.
pub fn multicut_start(instance: &Instance) -> InspectionStrategy {
    let cut = multicut_edges(instance);
    if cut.is_empty() {
        return InspectionStrategy::zeros(instance.network.edge_count());
    }
    let p = (instance.budget / cut.len() as f64).min(1.0);
    let pairs: Vec<(EdgeId, f64)> = cut.into_iter().map(|e| (e, p)).collect();
    InspectionStrategy::from_pairs(instance.network.edge_count(), &pairs)
        .expect("uniform split is a valid probability")
}

/// Cheapest surviving path, for the greedy edge counts. Deterministic:
/// Dijkstra with node-index ties.
fn residual_cost_path(
    net: &Network,
    removed: &[bool],
    source: NodeId,
    target: NodeId,
) -> Option<Vec<EdgeId>> {
    let weights = cost_weights(net);
    let mut dist = vec![f64::INFINITY; net.node_count()];
    let mut parent: Vec<Option<EdgeId>> = vec![None; net.node_count()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(MinEntry::new(0.0, source, source));
    while let Some(entry) = heap.pop() {
        let v = entry.item;
        if entry.key > dist[v] {
            continue;
        }
        for &id in net.out_edges(v) {
            if removed[id] {
                continue;
            }
            let e = net.edge(id);
            let cand = dist[v] + weights[id];
            if cand < dist[e.head] {
                dist[e.head] = cand;
                parent[e.head] = Some(id);
                heap.push(MinEntry::new(cand, e.head, e.head));
            }
        }
    }
    if !dist[target].is_finite() {
        return None;
    }
    let mut path = Vec::new();
    let mut v = target;
    while v != source {
        let id = parent[v].expect("finite distance implies a parent");
        path.push(id);
        v = net.edge(id).tail;
    }
    path.reverse();
    Some(path)
}

/// Fewest-hops surviving path, for branching: short paths mean few
/// children per node.
fn residual_hop_path(
    net: &Network,
    removed: &[bool],
    source: NodeId,
    target: NodeId,
) -> Option<Vec<EdgeId>> {
    let mut parent: Vec<Option<EdgeId>> = vec![None; net.node_count()];
    let mut seen = vec![false; net.node_count()];
    let mut queue = std::collections::VecDeque::new();
    seen[source] = true;
    queue.push_back(source);
    while let Some(v) = queue.pop_front() {
        if v == target {
            break;
        }
        for &id in net.out_edges(v) {
            if removed[id] {
                continue;
            }
            let head = net.edge(id).head;
            if !seen[head] {
                seen[head] = true;
                parent[head] = Some(id);
                queue.push_back(head);
            }
        }
    }
    if !seen[target] || source == target {
        return None;
    }
    let mut path = Vec::new();
    let mut v = target;
    while v != source {
        let id = parent[v].expect("reached nodes have parents");
        path.push(id);
        v = net.edge(id).tail;
    }
    path.reverse();
    Some(path)
}

/// Repeatedly cuts the edge lying on the most still-connected commodities'
/// cheapest paths; ties go to the lowest edge id.
fn greedy_multicut(instance: &Instance) -> Vec<EdgeId> {
    let net = &instance.network;
    let mut removed = vec![false; net.edge_count()];
    let mut cut = Vec::new();
    loop {
        let mut counts = vec![0usize; net.edge_count()];
        let mut any = false;
        for com in &instance.commodities {
            if let Some(path) = residual_cost_path(net, &removed, com.source, com.target) {
                any = true;
                for id in path {
                    counts[id] += 1;
                }
            }
        }
        if !any {
            return cut;
        }
        let best = (0..net.edge_count())
            .max_by_key(|&id| (counts[id], std::cmp::Reverse(id)))
            .expect("network has edges");
        debug_assert!(counts[best] > 0);
        removed[best] = true;
        cut.push(best);
    }
}

/// Minimum-cardinality multicut by branch and bound: branch over the edges
/// of a fewest-hops path of some still-connected commodity (every multicut
/// must contain one of them), seeded with the greedy cut as incumbent.
fn exact_multicut(instance: &Instance) -> Vec<EdgeId> {
    let net = &instance.network;
    let mut best = greedy_multicut(instance);
    let mut removed = vec![false; net.edge_count()];
    let mut cut = Vec::new();
    branch(instance, &mut removed, &mut cut, &mut best);
    best.sort_unstable();
    best
}

fn branch(
    instance: &Instance,
    removed: &mut Vec<bool>,
    cut: &mut Vec<EdgeId>,
    best: &mut Vec<EdgeId>,
) {
    let net = &instance.network;
    let mut pick: Option<Vec<EdgeId>> = None;
    for com in &instance.commodities {
        if let Some(path) = residual_hop_path(net, removed, com.source, com.target) {
            if pick.as_ref().is_none_or(|p| path.len() < p.len()) {
                pick = Some(path);
            }
        }
    }
    let Some(path) = pick else {
        if cut.len() < best.len() {
            *best = cut.clone();
        }
        return;
    };
    // At least one more edge is needed.
    if cut.len() + 1 >= best.len() {
        return;
    }
    for id in path {
        removed[id] = true;
        cut.push(id);
        branch(instance, removed, cut, best);
        cut.pop();
        removed[id] = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;
    use crate::instance::samples::{cycle, parallel_arcs};
    use crate::instance::Commodity;

    fn cuts_everything(instance: &Instance, cut: &[EdgeId]) -> bool {
        let mut removed = vec![false; instance.network.edge_count()];
        for &e in cut {
            removed[e] = true;
        }
        instance.commodities.iter().all(|c| {
            residual_hop_path(&instance.network, &removed, c.source, c.target).is_none()
        })
    }

    #[test]
    fn bridge_edge_is_the_whole_cut() {
        let (inst, _) = parallel_arcs();
        let cut = multicut_edges(&inst);
        assert_eq!(cut, vec![0]);
        let start = multicut_start(&inst);
        assert_eq!(start.p(0), 1.0);
        assert_eq!(start.mass(), 1.0);
    }

    #[test]
    fn disjoint_paths_need_two_edges() {
        let net = Network::new(
            vec!["s".into(), "t".into()],
            vec![
                Edge { id: 0, tail: 0, head: 1, cost: 1.0 },
                Edge { id: 1, tail: 0, head: 1, cost: 1.0 },
            ],
        )
        .unwrap();
        let inst = Instance::new(
            net,
            vec![Commodity { source: 0, target: 1, demand: 1.0, ticket: 1.0 }],
            2.0,
            1.0,
        )
        .unwrap();
        let cut = multicut_edges(&inst);
        assert_eq!(cut.len(), 2);
        assert!(cuts_everything(&inst, &cut));
        // Budget 1 split over two edges.
        let start = multicut_start(&inst);
        assert_eq!(start.p(0), 0.5);
        assert_eq!(start.p(1), 0.5);
    }

    #[test]
    fn cycle_cut_needs_two_edges() {
        // Each commodity's unique route misses exactly one cycle edge, so
        // no single edge cuts them all.
        let inst = cycle(4);
        let cut = multicut_edges(&inst);
        assert_eq!(cut.len(), 2);
        assert!(cuts_everything(&inst, &cut));
    }

    #[test]
    fn full_probability_cut_collects_all_demand() {
        // Zero travel costs and T = F = 1: probability one on a multicut
        // makes every passenger pay, whether they ticket or evade.
        let net = Network::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![
                Edge { id: 0, tail: 0, head: 1, cost: 0.0 },
                Edge { id: 1, tail: 1, head: 2, cost: 0.0 },
            ],
        )
        .unwrap();
        let inst = Instance::new(
            net,
            vec![
                Commodity { source: 0, target: 2, demand: 2.0, ticket: 1.0 },
                Commodity { source: 1, target: 2, demand: 3.0, ticket: 1.0 },
            ],
            1.0,
            2.0,
        )
        .unwrap();
        let cut = multicut_edges(&inst);
        assert_eq!(cut, vec![1]);
        let start = multicut_start(&inst);
        let breakdown =
            crate::leader::revenue_breakdown(&inst, &start, crate::leader::VariantId::FIX_N)
                .unwrap();
        assert!((breakdown.total_profit - 5.0).abs() < 1e-9);
    }

    #[test]
    fn greedy_handles_parallel_chains() {
        // 13 two-hop routes from s to t: 26 edges, above the exact-solver
        // cutoff, each route needs its own cut edge.
        let mut names: Vec<String> = vec!["s".into(), "t".into()];
        let mut edges = Vec::new();
        for i in 0..13 {
            names.push(format!("m{i}"));
            edges.push(Edge { id: 2 * i, tail: 0, head: 2 + i, cost: 1.0 });
            edges.push(Edge { id: 2 * i + 1, tail: 2 + i, head: 1, cost: 1.0 });
        }
        let net = Network::new(names, edges).unwrap();
        let inst = Instance::new(
            net,
            vec![Commodity { source: 0, target: 1, demand: 1.0, ticket: 1.0 }],
            2.0,
            5.0,
        )
        .unwrap();
        let cut = multicut_edges(&inst);
        assert_eq!(cut.len(), 13);
        assert!(cuts_everything(&inst, &cut));
    }
}
