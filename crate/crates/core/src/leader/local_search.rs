//! Local search over inspection strategies by shifting probability mass.
//!
//! A move picks two disjoint edge sets inside a fixed candidate support,
//! drains up to the current step length from one and pours the same amount
//! into the other, keeping the total inspection budget constant. Moves are
//! enumerated in deterministic edge-id order, the step length decays every
//! iteration, and only profit-increasing moves are applied, so the profit
//! sequence is non-decreasing and every intermediate strategy is feasible.

use crate::follower::SolveError;
use crate::graph::{shortest_paths_from, EdgeId};
use crate::instance::{InspectionStrategy, Instance};
use crate::tol::{SUPPORT_EPS, VALUE_EPS};

use super::{
    gap_ratio, LeaderSolution, ProfitEvaluator, Provenance, StartPoint, VariantId,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcceptanceRule {
    /// Evaluate the whole sweep, apply the best improving move.
    BestImprovement,
    /// Apply the first improving move found in sweep order.
    FirstImprovement,
}

#[derive(Debug, Clone)]
pub struct LocalSearchConfig {
    /// Cardinality cap on each side of a move.
    pub k: usize,
    /// Initial step length.
    pub delta0: f64,
    /// Multiplicative step decay per iteration.
    pub decay: f64,
    pub max_iterations: usize,
    /// Relative profit improvement below which an iteration stalls.
    pub stall_threshold: f64,
    /// Consecutive stalled iterations before giving up.
    pub stall_patience: usize,
    /// Reserved for randomized move orders; the deterministic enumeration
    /// ignores it.
    pub seed: u64,
    pub rule: AcceptanceRule,
    /// If set, rank moves by a relaxed-revenue proxy each sweep and
    /// evaluate only this many exactly. Keeps sweeps affordable on large
    /// supports at the cost of the best-improvement guarantee.
    pub move_budget: Option<usize>,
}

impl Default for LocalSearchConfig {
    fn default() -> Self {
        LocalSearchConfig {
            k: 1,
            delta0: 0.1,
            decay: 0.9,
            max_iterations: 30,
            stall_threshold: 1e-6,
            stall_patience: 5,
            seed: 0,
            rule: AcceptanceRule::BestImprovement,
            move_budget: None,
        }
    }
}

pub fn local_search(
    instance: &Instance,
    variant: VariantId,
    start: &InspectionStrategy,
    support: &[EdgeId],
    config: &LocalSearchConfig,
    upper_bound: f64,
    origin: StartPoint,
) -> Result<LeaderSolution, SolveError> {
    assert!(config.k >= 1, "move cardinality must be at least 1");
    assert!(config.delta0 > 0.0, "step length must be positive");
    assert!(
        config.decay > 0.0 && config.decay < 1.0,
        "decay must lie strictly between 0 and 1"
    );
    for (id, &p) in start.probabilities().iter().enumerate() {
        assert!(
            p <= SUPPORT_EPS || support.contains(&id),
            "support must cover every positive-probability edge of the start"
        );
    }

    let evaluator = ProfitEvaluator::new(instance, variant);
    let moves = enumerate_moves(support, config.k);
    let mut strategy = start.clone();
    let mut profit = evaluator.profit(&strategy)?;
    let mut delta = config.delta0;
    let mut stall = 0usize;
    let mut iterations = 0usize;

    for _ in 0..config.max_iterations {
        iterations += 1;
        let order = sweep_order(instance, &strategy, &moves, config.move_budget);
        let mut best_profit = profit;
        let mut best_next: Option<InspectionStrategy> = None;
        for &mi in &order {
            let (donors, receivers) = &moves[mi];
            let Some(candidate) = apply_move(&strategy, donors, receivers, delta) else {
                continue;
            };
            let value = evaluator.profit(&candidate)?;
            if value > best_profit + VALUE_EPS {
                best_profit = value;
                best_next = Some(candidate);
                if config.rule == AcceptanceRule::FirstImprovement {
                    break;
                }
            }
        }
        let improvement = best_profit - profit;
        if let Some(next) = best_next {
            debug_assert!(next.validate_feasible(instance).is_ok());
            debug_assert!((next.mass() - strategy.mass()).abs() <= 1e-9);
            strategy = next;
            profit = best_profit;
        }
        if improvement < config.stall_threshold * profit.abs().max(1.0) {
            stall += 1;
            if stall >= config.stall_patience {
                break;
            }
        } else {
            stall = 0;
        }
        delta *= config.decay;
    }

    let breakdown = evaluator.breakdown(&strategy)?;
    Ok(LeaderSolution {
        strategy,
        variant,
        breakdown,
        upper_bound,
        gap: gap_ratio(profit, upper_bound),
        provenance: Provenance::LocalSearch { start: origin },
        iterations,
    })
}

/// All ordered pairs of disjoint nonempty subsets of the support with at
/// most `k` edges per side, donors first; deterministic lexicographic
/// order.
fn enumerate_moves(support: &[EdgeId], k: usize) -> Vec<(Vec<EdgeId>, Vec<EdgeId>)> {
    let mut sorted: Vec<EdgeId> = support.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let subsets = small_subsets(&sorted, k);
    let mut moves = Vec::new();
    for donors in &subsets {
        for receivers in &subsets {
            if donors.iter().all(|d| !receivers.contains(d)) {
                moves.push((donors.clone(), receivers.clone()));
            }
        }
    }
    moves
}

fn small_subsets(items: &[EdgeId], k: usize) -> Vec<Vec<EdgeId>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn recurse(
        items: &[EdgeId],
        from: usize,
        k: usize,
        current: &mut Vec<EdgeId>,
        out: &mut Vec<Vec<EdgeId>>,
    ) {
        if !current.is_empty() {
            out.push(current.clone());
        }
        if current.len() == k {
            return;
        }
        for i in from..items.len() {
            current.push(items[i]);
            recurse(items, i + 1, k, current, out);
            current.pop();
        }
    }
    recurse(items, 0, k, &mut current, &mut out);
    out
}

/// Move indices in evaluation order. Without a move budget this is simply
/// the enumeration order. With one, moves are ranked by the relaxed-profit
/// gain of shifting mass (receiver minus donor scores under one
/// supergradient of the concave relaxation) and only the top slice is
/// kept.
fn sweep_order(
    instance: &Instance,
    strategy: &InspectionStrategy,
    moves: &[(Vec<EdgeId>, Vec<EdgeId>)],
    move_budget: Option<usize>,
) -> Vec<usize> {
    let Some(budget) = move_budget else {
        return (0..moves.len()).collect();
    };
    if moves.len() <= budget {
        return (0..moves.len()).collect();
    }
    let scores = edge_scores(instance, strategy);
    let mut ranked: Vec<(f64, usize)> = moves
        .iter()
        .enumerate()
        .map(|(i, (donors, receivers))| {
            let d: f64 = donors.iter().map(|&e| scores[e]).sum();
            let r: f64 = receivers.iter().map(|&e| scores[e]).sum();
            (r / receivers.len() as f64 - d / donors.len() as f64, i)
        })
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    ranked.truncate(budget);
    ranked.into_iter().map(|(_, i)| i).collect()
}

/// Demand-weighted shortest-path usage of each edge when every edge
/// charges `c_e + F p_e`: one supergradient of the relaxation objective.
fn edge_scores(instance: &Instance, strategy: &InspectionStrategy) -> Vec<f64> {
    let net = &instance.network;
    let weights: Vec<f64> = net
        .edges()
        .iter()
        .map(|e| e.cost + instance.fine * strategy.p(e.id))
        .collect();
    let mut by_source: Vec<Option<(Vec<f64>, Vec<Option<EdgeId>>)>> = vec![None; net.node_count()];
    let mut scores = vec![0.0; net.edge_count()];
    for com in &instance.commodities {
        let (_, parent) = by_source[com.source]
            .get_or_insert_with(|| shortest_paths_from(net, &weights, com.source));
        let mut v = com.target;
        while v != com.source {
            let Some(id) = parent[v] else { break };
            scores[id] += instance.fine * com.demand;
            v = net.edge(id).tail;
        }
    }
    scores
}

/// Shifts `min(delta, drainable, fillable)` of probability mass from the
/// donors to the receivers, spreading each side as evenly as the box
/// bounds allow. Returns `None` when nothing can move.
fn apply_move(
    strategy: &InspectionStrategy,
    donors: &[EdgeId],
    receivers: &[EdgeId],
    delta: f64,
) -> Option<InspectionStrategy> {
    let drainable: f64 = donors.iter().map(|&e| strategy.p(e)).sum();
    let fillable: f64 = receivers.iter().map(|&e| 1.0 - strategy.p(e)).sum();
    let amount = delta.min(drainable).min(fillable);
    if amount <= VALUE_EPS {
        return None;
    }
    let mut probs = strategy.probabilities().to_vec();
    shift(&mut probs, donors, amount, true);
    shift(&mut probs, receivers, amount, false);
    Some(InspectionStrategy::from_dense(probs).expect("shift keeps probabilities in range"))
}

/// Water-filling: change every listed edge by the same amount towards its
/// bound; edges that hit the bound drop out and the remainder is spread
/// over the rest. `total` never exceeds the listed headroom.
fn shift(probs: &mut [f64], edges: &[EdgeId], mut total: f64, draining: bool) {
    let mut active: Vec<EdgeId> = edges.to_vec();
    while total > VALUE_EPS && !active.is_empty() {
        let share = total / active.len() as f64;
        // Headroom of the tightest active edge.
        let cap = active
            .iter()
            .map(|&e| if draining { probs[e] } else { 1.0 - probs[e] })
            .fold(f64::INFINITY, f64::min);
        let step = share.min(cap);
        for &e in &active {
            probs[e] = if draining {
                (probs[e] - step).max(0.0)
            } else {
                (probs[e] + step).min(1.0)
            };
        }
        total -= step * active.len() as f64;
        active.retain(|&e| {
            if draining {
                probs[e] > VALUE_EPS
            } else {
                probs[e] < 1.0 - VALUE_EPS
            }
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, Network};
    use crate::instance::samples::cycle;
    use crate::instance::Commodity;
    use crate::leader::{grid_search, round_relaxation, solve_relaxation, support_set};

    #[test]
    fn single_edge_support_is_a_fixed_point() {
        let inst = cycle(4);
        let start = InspectionStrategy::from_pairs(4, &[(0, 0.5)]).unwrap();
        let sol = local_search(
            &inst,
            VariantId::FLEX_N,
            &start,
            &[0],
            &LocalSearchConfig::default(),
            10.0,
            StartPoint::Multicut,
        )
        .unwrap();
        assert_eq!(sol.strategy.probabilities(), start.probabilities());
        // Patience runs out after 5 stalled iterations.
        assert_eq!(sol.iterations, 5);
    }

    #[test]
    fn profit_never_decreases_from_the_rounded_start() {
        let inst = cycle(5);
        let relax = solve_relaxation(&inst).unwrap();
        let rounded = round_relaxation(&inst, &relax, VariantId::FLEX_N).unwrap();
        let sol = local_search(
            &inst,
            VariantId::FLEX_N,
            &rounded.strategy,
            &support_set(&rounded.strategy),
            &LocalSearchConfig::default(),
            relax.objective,
            StartPoint::LpRound,
        )
        .unwrap();
        assert!(sol.profit() >= rounded.profit() - 1e-12);
        assert!((sol.strategy.mass() - rounded.strategy.mass()).abs() < 1e-9);
        assert!(sol.iterations <= 30);
    }

    #[test]
    fn rebalancing_escapes_a_concentrated_start() {
        // Two free parallel arcs under flexible fares: profit is
        // min(F p0, F p1), so parking the whole budget on one arc earns
        // nothing and the grid optimum is the even split. Local search has
        // to walk the mass across.
        let net = Network::new(
            vec!["s".into(), "t".into()],
            vec![
                Edge { id: 0, tail: 0, head: 1, cost: 0.0 },
                Edge { id: 1, tail: 0, head: 1, cost: 0.0 },
            ],
        )
        .unwrap();
        let inst = Instance::new(
            net,
            vec![Commodity { source: 0, target: 1, demand: 1.0, ticket: 2.0 }],
            4.0,
            1.0,
        )
        .unwrap();
        let start = InspectionStrategy::from_dense(vec![1.0, 0.0]).unwrap();
        let config = LocalSearchConfig { stall_patience: 10, ..Default::default() };
        let sol = local_search(
            &inst,
            VariantId::FLEX_N,
            &start,
            &[0, 1],
            &config,
            10.0,
            StartPoint::Multicut,
        )
        .unwrap();
        let (_, grid_profit) = grid_search(&inst, VariantId::FLEX_N, &[0, 1], 0.01).unwrap();
        assert!((grid_profit - 2.0).abs() < 1e-9);
        assert!(
            sol.profit() >= 0.95 * grid_profit,
            "{} vs grid {grid_profit}",
            sol.profit()
        );
    }

    #[test]
    fn water_filling_respects_bounds() {
        let mut probs = vec![0.05, 0.8, 0.9];
        shift(&mut probs, &[0, 1], 0.5, true);
        let drained = 0.85 - (probs[0] + probs[1]);
        assert!((drained - 0.5).abs() < 1e-12);
        assert_eq!(probs[0], 0.0);
        assert!((probs[1] - 0.35).abs() < 1e-12);

        let mut probs = vec![0.95, 0.5];
        shift(&mut probs, &[0, 1], 0.4, false);
        let filled = probs[0] + probs[1] - 1.45;
        assert!((filled - 0.4).abs() < 1e-12);
        assert_eq!(probs[0], 1.0);
        assert!((probs[1] - 0.85).abs() < 1e-12);
    }

    #[test]
    fn move_enumeration_is_disjoint_and_ordered() {
        let moves = enumerate_moves(&[2, 0, 1], 1);
        assert_eq!(moves.len(), 6);
        assert_eq!(moves[0], (vec![0], vec![1]));
        assert_eq!(moves[1], (vec![0], vec![2]));
        for (d, r) in &moves {
            assert_ne!(d, r);
        }
        // k = 2 over three edges: 6 subsets, pairs must stay disjoint.
        let moves = enumerate_moves(&[0, 1, 2], 2);
        for (d, r) in &moves {
            assert!(d.iter().all(|e| !r.contains(e)));
            assert!(d.len() <= 2 && r.len() <= 2);
        }
    }
}
