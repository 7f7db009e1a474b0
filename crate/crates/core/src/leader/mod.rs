//! Operator-side machinery: revenue evaluation for all four problem
//! variants, the budgeted concave relaxation with its rounding, multicut
//! warm starts, grid search for tiny instances and the local-search
//! framework.

mod grid;
mod local_search;
mod multicut;
mod relaxation;
mod revenue;
mod rounding;

pub use grid::grid_search;
pub use local_search::{local_search, AcceptanceRule, LocalSearchConfig};
pub use multicut::{multicut_edges, multicut_start};
pub use relaxation::{
    solve_relaxation, solve_relaxation_with, RelaxationConfig, RelaxationError,
    RelaxationSolution, ValueCap,
};
pub use revenue::{
    revenue, revenue_breakdown, CommodityRevenue, FollowerChoice, ProfitEvaluator,
    RevenueBreakdown,
};
pub use rounding::round_relaxation;

use serde::{Deserialize, Serialize};

use crate::follower::ResponseModel;
use crate::graph::EdgeId;
use crate::instance::InspectionStrategy;
use crate::tol::{GAP_EPS, SUPPORT_EPS};

/// How ticket prices are set: fixed per commodity up front, or chosen by
/// the operator per commodity after the inspection strategy (flexible).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FareScheme {
    Fixed,
    Flexible,
}

/// One of the four leader problems: fare scheme crossed with passenger
/// behavior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VariantId {
    pub fares: FareScheme,
    pub followers: ResponseModel,
}

impl VariantId {
    pub const FIX_N: VariantId =
        VariantId { fares: FareScheme::Fixed, followers: ResponseModel::NonAdaptive };
    pub const FIX_A: VariantId =
        VariantId { fares: FareScheme::Fixed, followers: ResponseModel::Adaptive };
    pub const FLEX_N: VariantId =
        VariantId { fares: FareScheme::Flexible, followers: ResponseModel::NonAdaptive };
    pub const FLEX_A: VariantId =
        VariantId { fares: FareScheme::Flexible, followers: ResponseModel::Adaptive };

    pub fn all() -> [VariantId; 4] {
        [Self::FIX_N, Self::FIX_A, Self::FLEX_N, Self::FLEX_A]
    }

    pub fn code(&self) -> &'static str {
        match (self.fares, self.followers) {
            (FareScheme::Fixed, ResponseModel::NonAdaptive) => "fix-n",
            (FareScheme::Fixed, ResponseModel::Adaptive) => "fix-a",
            (FareScheme::Flexible, ResponseModel::NonAdaptive) => "flex-n",
            (FareScheme::Flexible, ResponseModel::Adaptive) => "flex-a",
        }
    }
}

impl std::fmt::Display for VariantId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.code())
    }
}

impl std::str::FromStr for VariantId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fix-n" => Ok(Self::FIX_N),
            "fix-a" => Ok(Self::FIX_A),
            "flex-n" => Ok(Self::FLEX_N),
            "flex-a" => Ok(Self::FLEX_A),
            other => Err(format!(
                "unknown variant '{other}', expected one of fix-n, fix-a, flex-n, flex-a"
            )),
        }
    }
}

/// Strategy that seeded a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartPoint {
    LpRound,
    Multicut,
}

impl std::fmt::Display for StartPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StartPoint::LpRound => f.write_str("lp-round"),
            StartPoint::Multicut => f.write_str("multicut"),
        }
    }
}

/// How a leader solution was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    LpRound,
    Multicut,
    LocalSearch { start: StartPoint },
    GridSearch,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::LpRound => f.write_str("lp-round"),
            Provenance::Multicut => f.write_str("multicut"),
            Provenance::LocalSearch { start } => write!(f, "local-search({start})"),
            Provenance::GridSearch => f.write_str("grid-search"),
        }
    }
}

/// A feasible inspection strategy together with its evaluated revenue and
/// the relaxation bound it is measured against.
#[derive(Debug, Clone)]
pub struct LeaderSolution {
    pub strategy: InspectionStrategy,
    pub variant: VariantId,
    pub breakdown: RevenueBreakdown,
    pub upper_bound: f64,
    /// profit / upper_bound, with gap = 1 when the bound is zero.
    pub gap: f64,
    pub provenance: Provenance,
    pub iterations: usize,
}

impl LeaderSolution {
    pub fn profit(&self) -> f64 {
        self.breakdown.total_profit
    }
}

#[derive(Serialize, Deserialize)]
struct LeaderSolutionDto {
    probabilities: Vec<f64>,
    variant: VariantId,
    breakdown: RevenueBreakdown,
    profit: f64,
    upper_bound: f64,
    gap: f64,
    provenance: Provenance,
    iterations: usize,
}

impl Serialize for LeaderSolution {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        LeaderSolutionDto {
            probabilities: self.strategy.probabilities().to_vec(),
            variant: self.variant,
            breakdown: self.breakdown.clone(),
            profit: self.profit(),
            upper_bound: self.upper_bound,
            gap: self.gap,
            provenance: self.provenance,
            iterations: self.iterations,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LeaderSolution {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let dto = LeaderSolutionDto::deserialize(deserializer)?;
        let strategy = InspectionStrategy::from_dense(dto.probabilities)
            .map_err(serde::de::Error::custom)?;
        Ok(LeaderSolution {
            strategy,
            variant: dto.variant,
            breakdown: dto.breakdown,
            upper_bound: dto.upper_bound,
            gap: dto.gap,
            provenance: dto.provenance,
            iterations: dto.iterations,
        })
    }
}

/// Ratio of achieved profit to the relaxation bound. A zero bound forces a
/// zero optimum, so the ratio is defined as 1 there.
pub fn gap_ratio(profit: f64, upper_bound: f64) -> f64 {
    if upper_bound <= GAP_EPS {
        1.0
    } else {
        profit / upper_bound
    }
}

/// Edges carrying more than a negligible inspection probability.
pub fn support_set(strategy: &InspectionStrategy) -> Vec<EdgeId> {
    strategy
        .probabilities()
        .iter()
        .enumerate()
        .filter_map(|(id, &p)| (p > SUPPORT_EPS).then_some(id))
        .collect()
}
