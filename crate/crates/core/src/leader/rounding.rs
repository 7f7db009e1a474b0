//! Turning a relaxation solution into a concrete strategy.
//!
//! The relaxation's probabilities are already feasible, so "rounding" is
//! simply reading them as the inspection strategy and evaluating the true
//! revenue. For flexible fares this carries worst-case guarantees against
//! the relaxation optimum: at least `1 - 1/e` of it for non-adaptive
//! passengers and at least `(3/4) * (1 - 1/e)` for adaptive ones. Fixed
//! fares come with no such guarantee; arbitrarily small probability changes
//! can flip ticket decisions and collapse the profit.

use crate::follower::SolveError;
use crate::instance::Instance;

use super::{gap_ratio, LeaderSolution, ProfitEvaluator, Provenance, RelaxationSolution, VariantId};

pub fn round_relaxation(
    instance: &Instance,
    relaxation: &RelaxationSolution,
    variant: VariantId,
) -> Result<LeaderSolution, SolveError> {
    let strategy = relaxation.strategy.clone();
    let breakdown = ProfitEvaluator::new(instance, variant).breakdown(&strategy)?;
    let gap = gap_ratio(breakdown.total_profit, relaxation.objective);
    Ok(LeaderSolution {
        strategy,
        variant,
        breakdown,
        upper_bound: relaxation.objective,
        gap,
        provenance: Provenance::LpRound,
        iterations: relaxation.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::samples::cycle;
    use crate::leader::solve_relaxation;

    #[test]
    fn cycle_rounding_value_and_guarantee() {
        let inst = cycle(5);
        let relax = solve_relaxation(&inst).unwrap();
        let sol = round_relaxation(&inst, &relax, VariantId::FLEX_N).unwrap();
        // Uniform p = 1/4 on a 4-edge detour per commodity: each passenger
        // pays 1 - (3/4)^4 and there are five of them.
        let expected = 5.0 * (1.0 - 0.75f64.powi(4));
        assert!((sol.profit() - expected).abs() < 1e-9, "{}", sol.profit());
        assert!(sol.profit() >= (1.0 - (-1.0f64).exp()) * relax.objective - 1e-9);
        assert!(sol.gap > 0.0 && sol.gap <= 1.0 + 1e-6);
    }

    #[test]
    fn adaptive_rounding_keeps_three_quarters_of_the_guarantee() {
        let inst = cycle(5);
        let relax = solve_relaxation(&inst).unwrap();
        let sol = round_relaxation(&inst, &relax, VariantId::FLEX_A).unwrap();
        let bound = 0.75 * (1.0 - (-1.0f64).exp()) * relax.objective;
        assert!(sol.profit() >= bound - 1e-9, "{} < {bound}", sol.profit());
    }

    #[test]
    fn zero_budget_rounds_to_zero_profit() {
        let inst = cycle(4).with_budget(0.0);
        let relax = solve_relaxation(&inst).unwrap();
        for variant in VariantId::all() {
            let sol = round_relaxation(&inst, &relax, variant).unwrap();
            assert_eq!(sol.profit(), 0.0, "{variant}");
            assert_eq!(sol.gap, 1.0);
        }
    }
}
