//! Per-passenger revenue under the four problem variants.
//!
//! Revenue is driven by the follower's best response. Under fixed fares the
//! passenger compares the best evasion value against buying a ticket and
//! the operator collects either the ticket price or the expected fine;
//! evasion ties within `VALUE_EPS` are broken in the operator's favor by
//! taking the largest expected fine among tied responses. Under flexible
//! fares the operator prices each commodity at its willingness to pay, the
//! gap between the best evasion value and the plain shortest-path cost.

use serde::{Deserialize, Serialize};

use crate::follower::{
    adaptive_labels, follower_result_from_labels, nonadaptive_frontier, AdaptiveLabels,
    ResponseModel, SolveError,
};
use crate::graph::{cost_weights, shortest_paths_from, tree_path, EdgeId};
use crate::instance::{InspectionStrategy, Instance};
use crate::tol::VALUE_EPS;

use super::{FareScheme, VariantId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FollowerChoice {
    /// Pays the fare. Under flexible fares every passenger is priced at
    /// indifference and recorded as a ticket buyer.
    Ticket,
    Evade,
}

/// Revenue earned from one commodity, per unit of demand.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommodityRevenue {
    pub commodity: usize,
    /// Operator income per passenger of this commodity.
    pub revenue: f64,
    pub choice: FollowerChoice,
    /// The response path: the committed evasion route, or for ticket
    /// buyers the route whose value pinned the decision.
    pub path: Vec<EdgeId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RevenueBreakdown {
    pub per_commodity: Vec<CommodityRevenue>,
    /// Demand-weighted sum of the per-commodity revenues.
    pub total_profit: f64,
}

/// Revenue evaluator with the strategy-independent parts (cost shortest
/// paths, commodity grouping) computed once. Evaluating many strategies
/// against the same instance should reuse one evaluator.
pub struct ProfitEvaluator<'a> {
    instance: &'a Instance,
    variant: VariantId,
    sp_cost: Vec<f64>,
    sp_path: Vec<Vec<EdgeId>>,
    /// Distinct commodity targets, for sharing adaptive label runs.
    targets: Vec<usize>,
}

impl<'a> ProfitEvaluator<'a> {
    pub fn new(instance: &'a Instance, variant: VariantId) -> Self {
        let net = &instance.network;
        let weights = cost_weights(net);
        let mut dist_cache: Vec<Option<(Vec<f64>, Vec<Option<EdgeId>>)>> =
            vec![None; net.node_count()];
        let mut sp_cost = Vec::with_capacity(instance.commodities.len());
        let mut sp_path = Vec::with_capacity(instance.commodities.len());
        for com in &instance.commodities {
            if dist_cache[com.source].is_none() {
                dist_cache[com.source] = Some(shortest_paths_from(net, &weights, com.source));
            }
            let (dist, parent) = dist_cache[com.source].as_ref().unwrap();
            sp_cost.push(dist[com.target]);
            let path = tree_path(net, parent, com.source, com.target)
                .expect("validated instances reach every commodity target");
            sp_path.push(path);
        }
        let mut targets: Vec<usize> = instance.commodities.iter().map(|c| c.target).collect();
        targets.sort_unstable();
        targets.dedup();
        ProfitEvaluator { instance, variant, sp_cost, sp_path, targets }
    }

    pub fn variant(&self) -> VariantId {
        self.variant
    }

    pub fn shortest_path_cost(&self, commodity: usize) -> f64 {
        self.sp_cost[commodity]
    }

    /// Total profit of a strategy, the demand-weighted revenue sum.
    pub fn profit(&self, strategy: &InspectionStrategy) -> Result<f64, SolveError> {
        let labels = self.adaptive_label_runs(strategy);
        let mut total = 0.0;
        for (i, com) in self.instance.commodities.iter().enumerate() {
            let (gamma, _, _) = self.commodity_revenue(strategy, i, &labels)?;
            total += com.demand * gamma;
        }
        Ok(total)
    }

    pub fn breakdown(&self, strategy: &InspectionStrategy) -> Result<RevenueBreakdown, SolveError> {
        let labels = self.adaptive_label_runs(strategy);
        let mut per_commodity = Vec::with_capacity(self.instance.commodities.len());
        let mut total = 0.0;
        for (i, com) in self.instance.commodities.iter().enumerate() {
            let (revenue, choice, path) = self.commodity_revenue(strategy, i, &labels)?;
            total += com.demand * revenue;
            per_commodity.push(CommodityRevenue { commodity: i, revenue, choice, path });
        }
        Ok(RevenueBreakdown { per_commodity, total_profit: total })
    }

    /// One adaptive label run per distinct target; empty for non-adaptive
    /// variants.
    fn adaptive_label_runs(&self, strategy: &InspectionStrategy) -> Vec<(usize, AdaptiveLabels)> {
        if self.variant.followers != ResponseModel::Adaptive {
            return Vec::new();
        }
        self.targets
            .iter()
            .map(|&t| (t, adaptive_labels(&self.instance.network, strategy, self.instance.fine, t)))
            .collect()
    }

    fn commodity_revenue(
        &self,
        strategy: &InspectionStrategy,
        i: usize,
        labels: &[(usize, AdaptiveLabels)],
    ) -> Result<(f64, FollowerChoice, Vec<EdgeId>), SolveError> {
        let com = &self.instance.commodities[i];
        let fine = self.instance.fine;
        let sp = self.sp_cost[i];
        match self.variant.followers {
            ResponseModel::NonAdaptive => match self.variant.fares {
                FareScheme::Fixed => self.fixed_nonadaptive(strategy, i, sp, com.ticket),
                FareScheme::Flexible => {
                    let sol = nonadaptive_frontier(
                        &self.instance.network,
                        strategy,
                        fine,
                        com.source,
                        com.target,
                        Some(sp + fine),
                    )?;
                    let gamma = (sol.result.value - sp).max(0.0);
                    Ok((gamma, FollowerChoice::Ticket, sol.result.path))
                }
            },
            ResponseModel::Adaptive => {
                let run = &labels
                    .iter()
                    .find(|(t, _)| *t == com.target)
                    .expect("labels cover every target")
                    .1;
                let res = follower_result_from_labels(
                    &self.instance.network,
                    strategy,
                    run,
                    com.source,
                    com.target,
                )?;
                match self.variant.fares {
                    FareScheme::Fixed => {
                        let ticket_value = sp + com.ticket;
                        let mut revenue = f64::NEG_INFINITY;
                        let mut choice = FollowerChoice::Ticket;
                        let mut path = self.sp_path[i].clone();
                        if ticket_value <= res.value + VALUE_EPS {
                            revenue = com.ticket;
                        }
                        if res.value <= ticket_value + VALUE_EPS {
                            let fined = fine * (1.0 - res.label.survival);
                            if fined > revenue + VALUE_EPS {
                                revenue = fined;
                                choice = FollowerChoice::Evade;
                                path = res.path;
                            }
                        }
                        Ok((revenue, choice, path))
                    }
                    FareScheme::Flexible => {
                        let gamma = (res.value - sp).max(0.0);
                        Ok((gamma, FollowerChoice::Ticket, res.path))
                    }
                }
            }
        }
    }

    /// Fixed fares, non-adaptive: the passenger minimizes over evasion
    /// paths and the ticket; ties go to the option with the highest
    /// operator income, preferring the ticket when incomes tie too.
    fn fixed_nonadaptive(
        &self,
        strategy: &InspectionStrategy,
        i: usize,
        sp: f64,
        ticket: f64,
    ) -> Result<(f64, FollowerChoice, Vec<EdgeId>), SolveError> {
        let com = &self.instance.commodities[i];
        let fine = self.instance.fine;
        let ticket_value = sp + ticket;
        let sol = match nonadaptive_frontier(
            &self.instance.network,
            strategy,
            fine,
            com.source,
            com.target,
            Some(ticket_value),
        ) {
            Ok(sol) => sol,
            // Validated instances always have a path, so an empty search
            // means the bound pruned everything: every evasion path is
            // strictly worse than the ticket.
            Err(SolveError::Unreachable) => {
                return Ok((ticket, FollowerChoice::Ticket, self.sp_path[i].clone()))
            }
            Err(e) => return Err(e),
        };
        let best_value = sol.result.value.min(ticket_value);
        let mut revenue = f64::NEG_INFINITY;
        let mut choice = FollowerChoice::Evade;
        let mut path = Vec::new();
        if ticket_value <= best_value + VALUE_EPS {
            revenue = ticket;
            choice = FollowerChoice::Ticket;
            path = self.sp_path[i].clone();
        }
        for label in &sol.frontier {
            let value = label.cost + (1.0 - label.survival) * fine;
            if value <= best_value + VALUE_EPS {
                let fined = fine * (1.0 - label.survival);
                if fined > revenue + VALUE_EPS {
                    revenue = fined;
                    choice = FollowerChoice::Evade;
                    path = label.path.clone();
                }
            }
        }
        Ok((revenue, choice, path))
    }
}

/// Revenue of a single commodity under a strategy.
pub fn revenue(
    instance: &Instance,
    strategy: &InspectionStrategy,
    commodity: usize,
    variant: VariantId,
) -> Result<CommodityRevenue, SolveError> {
    let evaluator = ProfitEvaluator::new(instance, variant);
    let labels = evaluator.adaptive_label_runs(strategy);
    let (revenue, choice, path) = evaluator.commodity_revenue(strategy, commodity, &labels)?;
    Ok(CommodityRevenue { commodity, revenue, choice, path })
}

/// Full per-commodity revenue table for a strategy.
pub fn revenue_breakdown(
    instance: &Instance,
    strategy: &InspectionStrategy,
    variant: VariantId,
) -> Result<RevenueBreakdown, SolveError> {
    ProfitEvaluator::new(instance, variant).breakdown(strategy)
}
