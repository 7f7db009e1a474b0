//! Exhaustive grid search over inspection strategies.
//!
//! Only practical when the candidate edge set is tiny; used as a
//! ground-truth oracle for the heuristics and exposed to the benchmark
//! harness for the same purpose.

use crate::follower::SolveError;
use crate::graph::EdgeId;
use crate::instance::{InspectionStrategy, Instance};
use crate::tol::VALUE_EPS;

use super::{ProfitEvaluator, VariantId};

/// Best strategy over the grid `{0, step, 2 step, ...} ^ support` subject
/// to the budget. Returns the strategy and its profit. Enumeration is
/// lexicographic, so ties keep the lexicographically smallest assignment.
pub fn grid_search(
    instance: &Instance,
    variant: VariantId,
    support: &[EdgeId],
    step: f64,
) -> Result<(InspectionStrategy, f64), SolveError> {
    assert!(step > 0.0 && step <= 1.0, "grid step must be in (0, 1]");
    let evaluator = ProfitEvaluator::new(instance, variant);
    let levels = (1.0 / step).round() as usize + 1;
    let mut current = InspectionStrategy::zeros(instance.network.edge_count());
    let mut best = current.clone();
    let mut best_profit = evaluator.profit(&current)?;
    let mut stack: Vec<usize> = vec![0; support.len()];
    enumerate(
        &evaluator,
        support,
        step,
        levels,
        0,
        instance.budget,
        &mut stack,
        &mut current,
        &mut best,
        &mut best_profit,
    )?;
    Ok((best, best_profit))
}

#[allow(clippy::too_many_arguments)]
fn enumerate(
    evaluator: &ProfitEvaluator,
    support: &[EdgeId],
    step: f64,
    levels: usize,
    depth: usize,
    budget_left: f64,
    stack: &mut Vec<usize>,
    current: &mut InspectionStrategy,
    best: &mut InspectionStrategy,
    best_profit: &mut f64,
) -> Result<(), SolveError> {
    if depth == support.len() {
        if depth > 0 && stack.iter().all(|&l| l == 0) {
            // The all-zero point was scored as the initial incumbent.
            return Ok(());
        }
        let profit = evaluator.profit(current)?;
        if profit > *best_profit + VALUE_EPS {
            *best_profit = profit;
            *best = current.clone();
        }
        return Ok(());
    }
    let edge = support[depth];
    for level in 0..levels {
        let p = ((level as f64) * step).min(1.0);
        if p > budget_left + VALUE_EPS {
            break;
        }
        stack[depth] = level;
        current.set(edge, p).expect("grid levels are valid probabilities");
        enumerate(
            evaluator,
            support,
            step,
            levels,
            depth + 1,
            budget_left - p,
            stack,
            current,
            best,
            best_profit,
        )?;
    }
    stack[depth] = 0;
    current.set(edge, 0.0).expect("zero is a valid probability");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, Network};
    use crate::instance::Commodity;

    /// Two parallel arcs, one commodity, generous fine: the grid optimum
    /// concentrates the budget rather than splitting it.
    fn two_arc_instance() -> Instance {
        let net = Network::new(
            vec!["s".into(), "t".into()],
            vec![
                Edge { id: 0, tail: 0, head: 1, cost: 0.0 },
                Edge { id: 1, tail: 0, head: 1, cost: 0.0 },
            ],
        )
        .unwrap();
        Instance::new(
            net,
            vec![Commodity { source: 0, target: 1, demand: 1.0, ticket: 4.0 }],
            4.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn grid_finds_the_balanced_split() {
        // Flexible fares: profit = min(4 p0, 4 p1), maximized by an even
        // split of the unit budget.
        let inst = two_arc_instance();
        let (best, profit) =
            grid_search(&inst, VariantId::FLEX_N, &[0, 1], 0.05).unwrap();
        assert!((profit - 2.0).abs() < 1e-9, "{profit}");
        assert!((best.p(0) - 0.5).abs() < 1e-9);
        assert!((best.p(1) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn empty_support_scores_the_zero_strategy() {
        let inst = two_arc_instance();
        let (best, profit) = grid_search(&inst, VariantId::FLEX_N, &[], 0.1).unwrap();
        assert_eq!(profit, 0.0);
        assert_eq!(best.mass(), 0.0);
    }
}
