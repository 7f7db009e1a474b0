//! Directed network with explicit edge ids and nonnegative edge costs.
//!
//! Parallel edges are allowed and addressable through their ids, which is
//! why adjacency is stored as edge-id lists rather than node pairs.

use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::heap::MinEntry;
use crate::instance::InspectionStrategy;

pub type NodeId = usize;
pub type EdgeId = usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    pub tail: NodeId,
    pub head: NodeId,
    pub cost: f64,
}

#[derive(Debug, Clone)]
pub struct Network {
    node_names: Vec<String>,
    edges: Vec<Edge>,
    out_edges: Vec<Vec<EdgeId>>,
    in_edges: Vec<Vec<EdgeId>>,
}

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("edge {id}: endpoint {node} out of range (network has {nodes} nodes)")]
    BadEndpoint { id: EdgeId, node: NodeId, nodes: usize },
    #[error("edge {id}: cost {cost} is not a nonnegative finite number")]
    BadCost { id: EdgeId, cost: f64 },
    #[error("edge list ids are not dense: expected id {expected}, found {found}")]
    NonDenseIds { expected: EdgeId, found: EdgeId },
}

impl Network {
    /// Builds the adjacency structure. Edges must be supplied in id order
    /// with dense ids `0..edges.len()`.
    pub fn new(node_names: Vec<String>, edges: Vec<Edge>) -> Result<Self, GraphError> {
        let n = node_names.len();
        for (i, e) in edges.iter().enumerate() {
            if e.id != i {
                return Err(GraphError::NonDenseIds { expected: i, found: e.id });
            }
            if e.tail >= n {
                return Err(GraphError::BadEndpoint { id: e.id, node: e.tail, nodes: n });
            }
            if e.head >= n {
                return Err(GraphError::BadEndpoint { id: e.id, node: e.head, nodes: n });
            }
            if !(e.cost.is_finite() && e.cost >= 0.0) {
                return Err(GraphError::BadCost { id: e.id, cost: e.cost });
            }
        }
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        for e in &edges {
            out_edges[e.tail].push(e.id);
            in_edges[e.head].push(e.id);
        }
        Ok(Network { node_names, edges, out_edges, in_edges })
    }

    pub fn node_count(&self) -> usize {
        self.node_names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn out_edges(&self, v: NodeId) -> &[EdgeId] {
        &self.out_edges[v]
    }

    pub fn in_edges(&self, v: NodeId) -> &[EdgeId] {
        &self.in_edges[v]
    }

    pub fn node_name(&self, v: NodeId) -> &str {
        &self.node_names[v]
    }

    pub fn node_names(&self) -> &[String] {
        &self.node_names
    }

    pub fn node_index(&self, name: &str) -> Option<NodeId> {
        self.node_names.iter().position(|n| n == name)
    }

    /// Sum of edge costs, used for "larger than any path cost" sentinels.
    pub fn total_cost(&self) -> f64 {
        self.edges.iter().map(|e| e.cost).sum()
    }
}

/// A path annotated with its additive cost and multiplicative survival
/// probability (probability of traversing all edges uninspected).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathLabel {
    pub cost: f64,
    pub survival: f64,
    pub path: Vec<EdgeId>,
}

#[derive(Debug, thiserror::Error)]
pub enum PathError {
    #[error("edge id {0} out of range")]
    UnknownEdge(EdgeId),
    #[error("edges {prev} and {next} are not contiguous ({prev} ends at node {head}, {next} starts at node {tail})")]
    NotAWalk { prev: EdgeId, next: EdgeId, head: NodeId, tail: NodeId },
}

/// Computes cost and survival of an edge sequence. The empty sequence is a
/// valid path with cost 0 and survival 1.
pub fn evaluate_path(
    net: &Network,
    strategy: &InspectionStrategy,
    edges: &[EdgeId],
) -> Result<PathLabel, PathError> {
    let mut cost = 0.0;
    let mut survival = 1.0;
    for (i, &id) in edges.iter().enumerate() {
        if id >= net.edge_count() {
            return Err(PathError::UnknownEdge(id));
        }
        if i > 0 {
            let prev = net.edge(edges[i - 1]);
            let next = net.edge(id);
            if prev.head != next.tail {
                return Err(PathError::NotAWalk {
                    prev: prev.id,
                    next: next.id,
                    head: prev.head,
                    tail: next.tail,
                });
            }
        }
        cost += net.edge(id).cost;
        survival *= 1.0 - strategy.p(id);
    }
    Ok(PathLabel { cost, survival, path: edges.to_vec() })
}

/// Single-target shortest-path distances: `result[v]` is the cheapest
/// `v -> target` distance under `weights` (indexed by edge id, all
/// nonnegative). Unreachable nodes get `f64::INFINITY`.
pub fn distances_to(net: &Network, weights: &[f64], target: NodeId) -> Vec<f64> {
    assert_eq!(weights.len(), net.edge_count());
    let mut dist = vec![f64::INFINITY; net.node_count()];
    dist[target] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(MinEntry::new(0.0, target, target));
    while let Some(entry) = heap.pop() {
        let w = entry.item;
        if entry.key > dist[w] {
            continue;
        }
        for &id in net.in_edges(w) {
            let e = net.edge(id);
            let cand = dist[w] + weights[id];
            if cand < dist[e.tail] {
                dist[e.tail] = cand;
                heap.push(MinEntry::new(cand, e.tail, e.tail));
            }
        }
    }
    dist
}

/// Single-source shortest paths from `source` under `weights`. Returns
/// distances and, per node, the incoming edge of one shortest path tree
/// (ties resolved by relaxation order, which is deterministic).
pub fn shortest_paths_from(
    net: &Network,
    weights: &[f64],
    source: NodeId,
) -> (Vec<f64>, Vec<Option<EdgeId>>) {
    assert_eq!(weights.len(), net.edge_count());
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
            let cand = dist[v] + weights[id];
            if cand < dist[e.head] {
                dist[e.head] = cand;
                parent[e.head] = Some(id);
                heap.push(MinEntry::new(cand, e.head, e.head));
            }
        }
    }
    (dist, parent)
}

/// Reconstructs the `source -> v` path from a shortest path tree produced by
/// [`shortest_paths_from`]. Returns `None` if `v` is unreachable.
pub fn tree_path(net: &Network, parent: &[Option<EdgeId>], source: NodeId, v: NodeId) -> Option<Vec<EdgeId>> {
    let mut path = Vec::new();
    let mut cur = v;
    while cur != source {
        let id = parent[cur]?;
        path.push(id);
        cur = net.edge(id).tail;
    }
    path.reverse();
    Some(path)
}

/// Edge costs as a weight vector.
pub fn cost_weights(net: &Network) -> Vec<f64> {
    net.edges.iter().map(|e| e.cost).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::samples::parallel_arcs;

    #[test]
    fn distances_on_parallel_arc_example() {
        let (inst, _) = parallel_arcs();
        let w = cost_weights(&inst.network);
        let t = inst.network.node_index("t").unwrap();
        let dist = distances_to(&inst.network, &w, t);
        let s = inst.network.node_index("s").unwrap();
        let v = inst.network.node_index("v").unwrap();
        assert_eq!(dist[s], 0.0);
        assert_eq!(dist[v], 0.0);
        assert_eq!(dist[t], 0.0);
    }

    #[test]
    fn distances_on_chain() {
        let net = Network::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![
                Edge { id: 0, tail: 0, head: 1, cost: 2.0 },
                Edge { id: 1, tail: 1, head: 2, cost: 3.0 },
            ],
        )
        .unwrap();
        let w = cost_weights(&net);
        let dist = distances_to(&net, &w, 2);
        assert_eq!(dist, vec![5.0, 3.0, 0.0]);
        let (fwd, parent) = shortest_paths_from(&net, &w, 0);
        assert_eq!(fwd, vec![0.0, 2.0, 5.0]);
        assert_eq!(tree_path(&net, &parent, 0, 2).unwrap(), vec![0, 1]);
    }

    #[test]
    fn unreachable_is_infinite() {
        let net = Network::new(vec!["a".into(), "b".into()], vec![]).unwrap();
        let dist = distances_to(&net, &[], 1);
        assert!(dist[0].is_infinite());
        assert_eq!(dist[1], 0.0);
    }

    #[test]
    fn single_node_distance_zero() {
        let net = Network::new(vec!["a".into()], vec![]).unwrap();
        let dist = distances_to(&net, &[], 0);
        assert_eq!(dist, vec![0.0]);
    }

    #[test]
    fn evaluate_path_accumulates() {
        let (inst, strategy) = parallel_arcs();
        let label = evaluate_path(&inst.network, &strategy, &[0, 1]).unwrap();
        assert_eq!(label.cost, 0.0);
        assert_eq!(label.survival, 0.0);
        let label = evaluate_path(&inst.network, &strategy, &[0, 2]).unwrap();
        assert_eq!(label.cost, 1.0);
        assert_eq!(label.survival, 0.5);
        let empty = evaluate_path(&inst.network, &strategy, &[]).unwrap();
        assert_eq!(empty.cost, 0.0);
        assert_eq!(empty.survival, 1.0);
    }

    #[test]
    fn evaluate_path_rejects_gaps() {
        let (inst, strategy) = parallel_arcs();
        // e1 and e2 are parallel v -> t arcs; e1 followed by e2 is not a walk.
        let err = evaluate_path(&inst.network, &strategy, &[1, 2]).unwrap_err();
        assert!(matches!(err, PathError::NotAWalk { .. }));
    }
}
