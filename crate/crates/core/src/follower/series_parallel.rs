//! Exact non-adaptive best response on two-terminal series-parallel graphs.
//!
//! Recognition works by exhaustive reduction: parallel edges are merged and
//! interior nodes with in- and out-degree one are contracted until either a
//! single source-target edge remains (success, yielding the decomposition
//! tree) or the graph is irreducible (certified failure with the remaining
//! structure as witness).
//!
//! The solver walks the decomposition tree bottom-up keeping candidate
//! subpaths, each annotated with an interval `[lo, hi]`: only if the full
//! optimal path's survival probability falls inside the interval can this
//! candidate be part of it. Series composition intersects intervals;
//! parallel composition removes dominated candidates and re-derives bounds
//! from pairwise cost/survival trade-offs, which keeps the candidate count
//! at most the number of edges in the subgraph.

use crate::graph::{evaluate_path, EdgeId, Network, NodeId};
use crate::instance::InspectionStrategy;
use crate::tol::VALUE_EPS;

use super::{FollowerResult, ResponseModel};

#[derive(Debug, Clone, PartialEq)]
pub enum SpTree {
    Leaf(EdgeId),
    Series(Box<SpTree>, Box<SpTree>),
    Parallel(Box<SpTree>, Box<SpTree>),
}

impl SpTree {
    pub fn series(a: SpTree, b: SpTree) -> SpTree {
        SpTree::Series(Box::new(a), Box::new(b))
    }

    pub fn parallel(a: SpTree, b: SpTree) -> SpTree {
        SpTree::Parallel(Box::new(a), Box::new(b))
    }

    pub fn edge_count(&self) -> usize {
        match self {
            SpTree::Leaf(_) => 1,
            SpTree::Series(a, b) | SpTree::Parallel(a, b) => a.edge_count() + b.edge_count(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SpError {
    #[error("graph is not two-terminal series-parallel between the given nodes; irreducible part: {witness}")]
    NotSeriesParallel { witness: String },
    #[error("no candidate path; source and target are identical or disconnected")]
    NoPath,
}

#[derive(Debug, Clone)]
struct RedEdge {
    tail: NodeId,
    head: NodeId,
    tree: SpTree,
}

/// Reduces the network to a single `source -> target` edge if possible and
/// returns the series-parallel decomposition tree.
pub fn sp_decompose(net: &Network, source: NodeId, target: NodeId) -> Result<SpTree, SpError> {
    if source == target || net.edge_count() == 0 {
        return Err(SpError::NoPath);
    }
    let mut edges: Vec<Option<RedEdge>> = net
        .edges()
        .iter()
        .map(|e| Some(RedEdge { tail: e.tail, head: e.head, tree: SpTree::Leaf(e.id) }))
        .collect();
    loop {
        if merge_first_parallel_pair(&mut edges) {
            continue;
        }
        if contract_first_series_node(&mut edges, net.node_count(), source, target) {
            continue;
        }
        break;
    }
    let live: Vec<&RedEdge> = edges.iter().flatten().collect();
    match live.as_slice() {
        [only] if only.tail == source && only.head == target => Ok(live[0].tree.clone()),
        _ => Err(SpError::NotSeriesParallel { witness: witness(net, &live) }),
    }
}

fn merge_first_parallel_pair(edges: &mut [Option<RedEdge>]) -> bool {
    for i in 0..edges.len() {
        let Some(a) = edges[i].clone() else { continue };
        for j in (i + 1)..edges.len() {
            let Some(b) = edges[j].clone() else { continue };
            if a.tail == b.tail && a.head == b.head {
                edges[i] = Some(RedEdge {
                    tail: a.tail,
                    head: a.head,
                    tree: SpTree::parallel(a.tree, b.tree),
                });
                edges[j] = None;
                return true;
            }
        }
    }
    false
}

fn contract_first_series_node(
    edges: &mut [Option<RedEdge>],
    node_count: usize,
    source: NodeId,
    target: NodeId,
) -> bool {
    for v in 0..node_count {
        if v == source || v == target {
            continue;
        }
        let mut incoming = None;
        let mut outgoing = None;
        let mut degree_ok = true;
        for (idx, e) in edges.iter().enumerate() {
            let Some(e) = e else { continue };
            if e.head == v {
                if incoming.is_some() || e.tail == v {
                    degree_ok = false;
                    break;
                }
                incoming = Some(idx);
            }
            if e.tail == v {
                if outgoing.is_some() || e.head == v {
                    degree_ok = false;
                    break;
                }
                outgoing = Some(idx);
            }
        }
        if !degree_ok {
            continue;
        }
        if let (Some(i), Some(o)) = (incoming, outgoing) {
            let a = edges[i].take().expect("checked live");
            let b = edges[o].take().expect("checked live");
            edges[i] = Some(RedEdge {
                tail: a.tail,
                head: b.head,
                tree: SpTree::series(a.tree, b.tree),
            });
        }
        if incoming.is_some() && outgoing.is_some() {
            return true;
        }
    }
    false
}

fn witness(net: &Network, live: &[&RedEdge]) -> String {
    let mut parts: Vec<String> = live
        .iter()
        .take(8)
        .map(|e| format!("{}->{}", net.node_name(e.tail), net.node_name(e.head)))
        .collect();
    if live.len() > 8 {
        parts.push(format!("... ({} reduced edges total)", live.len()));
    }
    parts.join(", ")
}

/// One candidate subpath with its survival-probability interval.
#[derive(Debug, Clone)]
pub struct SpCandidate {
    pub path: Vec<EdgeId>,
    pub cost: f64,
    pub survival: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Candidate paths at the root of the decomposition tree. The returned set
/// contains a path minimizing `c + (1 - pi) * fine` and has at most as many
/// entries as the subgraph has edges.
pub fn sp_candidates(
    net: &Network,
    strategy: &InspectionStrategy,
    fine: f64,
    tree: &SpTree,
) -> Vec<SpCandidate> {
    match tree {
        SpTree::Leaf(id) => vec![SpCandidate {
            path: vec![*id],
            cost: net.edge(*id).cost,
            survival: 1.0 - strategy.p(*id),
            lo: 0.0,
            hi: 1.0,
        }],
        SpTree::Series(a, b) => {
            let left = sp_candidates(net, strategy, fine, a);
            let right = sp_candidates(net, strategy, fine, b);
            let mut out = Vec::new();
            for ca in &left {
                for cb in &right {
                    let lo = ca.lo.max(cb.lo);
                    let hi = ca.hi.min(cb.hi);
                    if lo <= hi + VALUE_EPS {
                        let mut path = ca.path.clone();
                        path.extend_from_slice(&cb.path);
                        out.push(SpCandidate {
                            path,
                            cost: ca.cost + cb.cost,
                            survival: ca.survival * cb.survival,
                            lo,
                            hi,
                        });
                    }
                }
            }
            out
        }
        SpTree::Parallel(a, b) => {
            let mut cands = sp_candidates(net, strategy, fine, a);
            cands.extend(sp_candidates(net, strategy, fine, b));
            prune_parallel(&mut cands, fine);
            cands
        }
    }
}

/// Removes dominated candidates and re-derives the survival intervals from
/// pairwise trade-offs: exchanging a kept candidate P for a cheaper, riskier
/// one P' only pays off if the rest of the path survives often enough, which
/// bounds the optimal path's survival from both sides and makes the
/// intervals pairwise disjoint.
fn prune_parallel(cands: &mut Vec<SpCandidate>, fine: f64) {
    let tie = |x: f64, y: f64| (x - y).abs() <= VALUE_EPS;
    let n = cands.len();
    let mut removed = vec![false; n];
    for j in 0..n {
        for i in 0..n {
            if i == j || removed[i] {
                continue;
            }
            let (ci, pi) = (cands[i].cost, cands[i].survival);
            let (cj, pj) = (cands[j].cost, cands[j].survival);
            let dominates = (ci < cj - VALUE_EPS && pi >= pj - VALUE_EPS)
                || (ci <= cj + VALUE_EPS && pi > pj + VALUE_EPS);
            let tied = tie(ci, cj) && tie(pi, pj) && cands[i].path < cands[j].path;
            if dominates || tied {
                removed[j] = true;
                break;
            }
        }
    }
    let mut kept: Vec<SpCandidate> = cands
        .drain(..)
        .zip(removed)
        .filter_map(|(c, r)| (!r).then_some(c))
        .collect();
    for c in &mut kept {
        c.lo = 0.0;
        c.hi = 1.0;
    }
    if fine > 0.0 {
        for i in 0..kept.len() {
            for j in 0..kept.len() {
                if i == j {
                    continue;
                }
                // i strictly more expensive and more likely to survive.
                if kept[i].cost > kept[j].cost + VALUE_EPS
                    && kept[i].survival > kept[j].survival + VALUE_EPS
                {
                    let q = (kept[i].cost - kept[j].cost) / (kept[i].survival - kept[j].survival);
                    kept[i].lo = kept[i].lo.max(q * kept[i].survival / fine);
                    kept[j].hi = kept[j].hi.min(q * kept[j].survival / fine);
                }
            }
        }
    }
    *cands = kept;
}

/// Exact non-adaptive best response for a series-parallel source-target
/// pair.
pub fn solve_nonadaptive_sp(
    net: &Network,
    strategy: &InspectionStrategy,
    fine: f64,
    source: NodeId,
    target: NodeId,
) -> Result<FollowerResult, SpError> {
    let tree = sp_decompose(net, source, target)?;
    let cands = sp_candidates(net, strategy, fine, &tree);
    let best = cands
        .iter()
        .min_by(|a, b| {
            let fa = a.cost + (1.0 - a.survival) * fine;
            let fb = b.cost + (1.0 - b.survival) * fine;
            fa.total_cmp(&fb)
        })
        .ok_or(SpError::NoPath)?;
    let label = evaluate_path(net, strategy, &best.path).expect("candidates are contiguous");
    Ok(FollowerResult {
        path: best.path.clone(),
        value: label.cost + (1.0 - label.survival) * fine,
        label,
        model: ResponseModel::NonAdaptive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, Network};
    use crate::instance::samples::parallel_arcs;
    use crate::instance::InspectionStrategy;

    #[test]
    fn decomposes_parallel_arc_example() {
        let (inst, _) = parallel_arcs();
        let tree = sp_decompose(&inst.network, 0, 2).unwrap();
        let expected = SpTree::series(
            SpTree::Leaf(0),
            SpTree::parallel(SpTree::Leaf(1), SpTree::Leaf(2)),
        );
        assert_eq!(tree, expected);
    }

    #[test]
    fn single_edge_is_a_leaf() {
        let net = Network::new(
            vec!["a".into(), "b".into()],
            vec![Edge { id: 0, tail: 0, head: 1, cost: 1.0 }],
        )
        .unwrap();
        assert_eq!(sp_decompose(&net, 0, 1).unwrap(), SpTree::Leaf(0));
    }

    #[test]
    fn chord_breaks_series_parallel() {
        // Diamond s -> {a, b} -> t plus chord a -> b: the classic
        // irreducible bridge pattern.
        let net = Network::new(
            vec!["s".into(), "a".into(), "b".into(), "t".into()],
            vec![
                Edge { id: 0, tail: 0, head: 1, cost: 1.0 },
                Edge { id: 1, tail: 0, head: 2, cost: 1.0 },
                Edge { id: 2, tail: 1, head: 3, cost: 1.0 },
                Edge { id: 3, tail: 2, head: 3, cost: 1.0 },
                Edge { id: 4, tail: 1, head: 2, cost: 1.0 },
            ],
        )
        .unwrap();
        let err = sp_decompose(&net, 0, 3).unwrap_err();
        match err {
            SpError::NotSeriesParallel { witness } => {
                assert!(witness.contains("->"), "{witness}");
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn solves_parallel_arc_example() {
        let (inst, strategy) = parallel_arcs();
        let res = solve_nonadaptive_sp(&inst.network, &strategy, inst.fine, 0, 2).unwrap();
        assert_eq!(res.value, 2.0);
    }

    #[test]
    fn risky_cheap_arc_loses_to_safe_paid_arc() {
        // Two parallel arcs: free but nearly always inspected vs cost 1 and
        // never inspected, with a high fine.
        let net = Network::new(
            vec!["s".into(), "t".into()],
            vec![
                Edge { id: 0, tail: 0, head: 1, cost: 0.0 },
                Edge { id: 1, tail: 0, head: 1, cost: 1.0 },
            ],
        )
        .unwrap();
        let strategy = InspectionStrategy::from_pairs(2, &[(0, 0.9)]).unwrap();
        let res = solve_nonadaptive_sp(&net, &strategy, 10.0, 0, 1).unwrap();
        assert_eq!(res.path, vec![1]);
        assert_eq!(res.value, 1.0);
    }

    #[test]
    fn candidate_count_bounded_by_edges() {
        let (inst, strategy) = parallel_arcs();
        let tree = sp_decompose(&inst.network, 0, 2).unwrap();
        let cands = sp_candidates(&inst.network, &strategy, inst.fine, &tree);
        assert!(cands.len() <= tree.edge_count());
    }

    #[test]
    fn parallel_intervals_are_disjoint() {
        let (inst, strategy) = parallel_arcs();
        let tree = sp_decompose(&inst.network, 0, 2).unwrap();
        let cands = sp_candidates(&inst.network, &strategy, inst.fine, &tree);
        for i in 0..cands.len() {
            for j in 0..cands.len() {
                if i < j {
                    let overlap =
                        cands[i].lo.max(cands[j].lo) <= cands[i].hi.min(cands[j].hi) - VALUE_EPS;
                    assert!(!overlap, "intervals of candidates {i} and {j} overlap");
                }
            }
        }
    }
}
