//! Budget-constrained concave relaxation of the leader's problem.
//!
//! The relaxed objective replaces the true catch probability of a path by
//! the sum of its inspection probabilities, which turns the optimal value
//! into
//!
//! `max { sum_i d_i * min(SP_{c+F.p}(s_i,t_i) - SP_c(s_i,t_i), cap_i) :
//! p in [0,1]^E, sum_e p_e <= B }`.
//!
//! The default cap is the fine, and it loses nothing: a passenger can
//! always ride the plain shortest path and risk at most one fine on it,
//! so no pricing rule extracts more than `F` per unit of demand. Keeping
//! the cap explicit both tightens the bound and is what makes the
//! rounding guarantee of [`round_relaxation`](super::round_relaxation)
//! hold on paths whose inspection probabilities sum to more than one.
//! When fares are fixed the revenue ceiling per passenger drops further,
//! to the ticket price: paying is always an option, an evader's expected
//! fines stay below what would make paying cheaper, and so
//! [`ValueCap::Ticket`] caps each commodity at `min(T_i, F)` to give the
//! fixed-fare variants a bound that stays comparable to what inspection
//! can actually collect.
//!
//! Each summand is a minimum of affine functions of `p`, so the objective
//! is concave and piecewise linear. It is maximized by projected
//! supergradient ascent: one shortest path per commodity contributes
//! `F * d_i` on its edges while the commodity sits below its cap, steps
//! are normalized with a diminishing step size, and iterates are
//! projected exactly onto the capped box-simplex. The optimal value
//! upper-bounds the true profit of every feasible strategy under the
//! variants its cap covers, which is what makes it useful as a benchmark
//! denominator.

use crate::graph::{cost_weights, shortest_paths_from, EdgeId};
use crate::instance::{InspectionStrategy, Instance};
use crate::tol::VALUE_EPS;

/// Per-commodity ceiling applied to the relaxation's value terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ValueCap {
    /// Cap each commodity at the fine: valid for all four variants, tight
    /// for flexible fares where the leader reprices up to the passengers'
    /// evasion cost.
    #[default]
    Fine,
    /// Cap each commodity at `min(ticket, fine)`: revenue per passenger
    /// under fixed fares never exceeds the ticket price, so this tighter
    /// bound is valid for the fixed-fare variants only.
    Ticket,
}

#[derive(Debug, Clone)]
pub struct RelaxationConfig {
    /// Hard cap on ascent iterations.
    pub max_iterations: usize,
    /// Consecutive low-improvement iterations that count as convergence.
    pub stall_window: usize,
    /// Relative improvement below which an iteration counts as stalled.
    pub stall_tolerance: f64,
    /// Base step length; `None` picks `max(1, budget)`.
    pub step_scale: Option<f64>,
    /// Optional warm-start probabilities (e.g. from a smaller budget).
    pub initial: Option<InspectionStrategy>,
    /// Ceiling on each commodity's value term.
    pub cap: ValueCap,
}

impl Default for RelaxationConfig {
    fn default() -> Self {
        RelaxationConfig {
            max_iterations: 20_000,
            stall_window: 200,
            stall_tolerance: 1e-7,
            step_scale: None,
            initial: None,
            cap: ValueCap::Fine,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RelaxationSolution {
    pub strategy: InspectionStrategy,
    /// Per commodity: node potentials `y_i(v)`, the cheapest travel cost
    /// from `s_i` to `v` when every edge charges `c_e + F * p_e`, capped
    /// pointwise at `SP_c(s_i, t_i) + cap_i`. A pointwise minimum of two
    /// feasible potential vectors is feasible, so every edge constraint
    /// `y(w) - y(v) <= c + F p` still holds, and the cap keeps
    /// unreachable nodes finite.
    pub potentials: Vec<Vec<f64>>,
    /// Relaxation objective; upper bound on the profit of every variant
    /// covered by the configured cap.
    pub objective: f64,
    /// Per commodity: `y_i(t_i) - y_i(s_i) - SP_c(s_i, t_i)`, which the
    /// potential cap holds at or below the configured ceiling.
    pub lambda: Vec<f64>,
    pub iterations: usize,
    /// Distance between the best supergradient upper bound seen and the
    /// reported objective; small values certify near-optimality.
    pub certificate_gap: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum RelaxationError {
    #[error(
        "ascent hit the iteration cap ({iterations}) before stalling; certificate gap {certificate_gap:.3e}"
    )]
    NonConvergence {
        best: Box<RelaxationSolution>,
        iterations: usize,
        certificate_gap: f64,
    },
}

pub fn solve_relaxation(instance: &Instance) -> Result<RelaxationSolution, RelaxationError> {
    solve_relaxation_with(instance, &RelaxationConfig::default())
}

pub fn solve_relaxation_with(
    instance: &Instance,
    config: &RelaxationConfig,
) -> Result<RelaxationSolution, RelaxationError> {
    let net = &instance.network;
    let m = net.edge_count();
    let base_weights = cost_weights(net);
    let sp: Vec<f64> = {
        let mut by_source: Vec<Option<Vec<f64>>> = vec![None; net.node_count()];
        instance
            .commodities
            .iter()
            .map(|com| {
                let dist = by_source[com.source]
                    .get_or_insert_with(|| shortest_paths_from(net, &base_weights, com.source).0);
                dist[com.target]
            })
            .collect()
    };
    let caps: Vec<f64> = instance
        .commodities
        .iter()
        .map(|com| match config.cap {
            ValueCap::Fine => instance.fine,
            ValueCap::Ticket => com.ticket.min(instance.fine),
        })
        .collect();

    let mut p = match &config.initial {
        Some(start) => {
            let mut v = start.probabilities().to_vec();
            project_capped_box_simplex(&mut v, instance.budget);
            v
        }
        None => vec![0.0; m],
    };
    if instance.budget <= 0.0 || m == 0 {
        return Ok(build_solution(instance, &sp, &caps, vec![0.0; m], 0, 0.0));
    }

    let step_scale = config.step_scale.unwrap_or_else(|| instance.budget.max(1.0));
    // Steps run in short rounds: within a round the length decays as
    // 1/sqrt(i), and every round restarts from the incumbent. The scale is
    // halved only when the finished round failed to improve the incumbent
    // meaningfully: halving on a fixed schedule can outpace the ascent and
    // strand the incumbent short of the optimum, while never halving keeps
    // steps far too long for small budgets. Convergence needs both the
    // stall rule and a scale that has decayed to the floor; otherwise a
    // lucky stall at a coarse scale would freeze the value visibly short
    // of the optimum.
    const ROUND: usize = 64;
    let scale_floor = step_scale * 1e-9;
    let mut scale = step_scale;
    let mut grad = vec![0.0; m];
    let mut best_g = f64::NEG_INFINITY;
    let mut best_p = p.clone();
    let mut upper = f64::INFINITY;
    let mut mark = f64::NEG_INFINITY;
    let mut stall = 0usize;
    let mut converged = false;
    let mut iterations = 0usize;
    let mut round_base = f64::NEG_INFINITY;

    for t in 0..config.max_iterations {
        iterations = t + 1;
        if t > 0 && t % ROUND == 0 {
            p.copy_from_slice(&best_p);
            if best_g - round_base < config.stall_tolerance * best_g.abs().max(1.0) {
                scale *= 0.5;
            }
            round_base = best_g;
        }
        let g = evaluate(instance, &sp, &caps, &p, &mut grad);
        if g > best_g {
            best_g = g;
            best_p.copy_from_slice(&p);
        }
        let inner: f64 = grad.iter().zip(&p).map(|(gr, pe)| gr * pe).sum();
        upper = upper.min(g - inner + greedy_linear_max(&grad, instance.budget));

        if best_g - mark >= config.stall_tolerance * best_g.abs().max(1.0) {
            mark = best_g;
            stall = 0;
        } else {
            stall += 1;
            if stall >= config.stall_window && scale <= scale_floor {
                converged = true;
                break;
            }
        }

        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm < 1e-15 {
            // A zero supergradient of a concave function certifies a
            // maximum.
            converged = true;
            break;
        }
        let alpha = scale / ((t % ROUND + 1) as f64).sqrt();
        for (pe, gr) in p.iter_mut().zip(&grad) {
            *pe += alpha * gr / norm;
        }
        project_capped_box_simplex(&mut p, instance.budget);
    }

    let certificate_gap = (upper - best_g).max(0.0);
    let solution = build_solution(instance, &sp, &caps, best_p, iterations, certificate_gap);
    if converged {
        Ok(solution)
    } else {
        Err(RelaxationError::NonConvergence {
            best: Box::new(solution),
            iterations,
            certificate_gap,
        })
    }
}

/// Objective value at `p`; `grad` receives one supergradient (F * d_i on
/// one shortest path per commodity, zero for commodities whose detour sits
/// strictly above their cap).
fn evaluate(instance: &Instance, sp: &[f64], caps: &[f64], p: &[f64], grad: &mut [f64]) -> f64 {
    let net = &instance.network;
    let weights: Vec<f64> = net
        .edges()
        .iter()
        .map(|e| e.cost + instance.fine * p[e.id])
        .collect();
    grad.fill(0.0);
    let mut by_source: Vec<Option<(Vec<f64>, Vec<Option<EdgeId>>)>> = vec![None; net.node_count()];
    let mut g = 0.0;
    for (i, com) in instance.commodities.iter().enumerate() {
        let (dist, parent) = by_source[com.source]
            .get_or_insert_with(|| shortest_paths_from(net, &weights, com.source));
        let raw = dist[com.target] - sp[i];
        g += com.demand * raw.min(caps[i]);
        if raw > caps[i] {
            continue;
        }
        let mut v = com.target;
        while v != com.source {
            let id = parent[v].expect("validated instances connect every commodity");
            grad[id] += instance.fine * com.demand;
            v = net.edge(id).tail;
        }
    }
    g
}

/// `max { <grad, q> : q in [0,1]^E, sum q <= budget }` by greedy filling.
fn greedy_linear_max(grad: &[f64], budget: f64) -> f64 {
    let mut order: Vec<usize> = (0..grad.len()).collect();
    order.sort_by(|&a, &b| grad[b].total_cmp(&grad[a]).then(a.cmp(&b)));
    let mut left = budget;
    let mut total = 0.0;
    for id in order {
        if left <= 0.0 || grad[id] <= 0.0 {
            break;
        }
        let take = left.min(1.0);
        total += take * grad[id];
        left -= take;
    }
    total
}

fn build_solution(
    instance: &Instance,
    sp: &[f64],
    caps: &[f64],
    p: Vec<f64>,
    iterations: usize,
    certificate_gap: f64,
) -> RelaxationSolution {
    let net = &instance.network;
    let weights: Vec<f64> = net
        .edges()
        .iter()
        .map(|e| e.cost + instance.fine * p[e.id])
        .collect();
    let mut by_source: Vec<Option<Vec<f64>>> = vec![None; net.node_count()];
    let mut potentials = Vec::with_capacity(instance.commodities.len());
    let mut lambda = Vec::with_capacity(instance.commodities.len());
    let mut objective = 0.0;
    for (i, com) in instance.commodities.iter().enumerate() {
        let dist = by_source[com.source]
            .get_or_insert_with(|| shortest_paths_from(net, &weights, com.source).0);
        // Distances obey the triangle inequality on every edge, and a
        // constant vector trivially does, so their pointwise minimum keeps
        // y(w) - y(v) <= c + F p while bounding lambda by the cap.
        let cap = sp[i] + caps[i];
        let y: Vec<f64> = dist.iter().map(|&d| d.min(cap)).collect();
        let l = y[com.target] - y[com.source] - sp[i];
        objective += com.demand * l;
        lambda.push(l);
        potentials.push(y);
    }
    let strategy = InspectionStrategy::from_dense(p).expect("projected probabilities are valid");
    debug_assert!(strategy.mass() <= instance.budget + VALUE_EPS);
    RelaxationSolution { strategy, potentials, objective, lambda, iterations, certificate_gap }
}

/// Exact Euclidean projection onto `{x : 0 <= x <= 1, sum x <= budget}`.
///
/// KKT: the projection is `clamp(v - theta, 0, 1)` where `theta = 0` if the
/// clamped point already fits the budget and otherwise solves
/// `sum clamp(v - theta, 0, 1) = budget`. The sum is a piecewise-linear
/// nonincreasing function of `theta` with breakpoints at `v_e` and
/// `v_e - 1`, so a single descending sweep locates `theta` exactly.
pub(crate) fn project_capped_box_simplex(v: &mut [f64], budget: f64) {
    let clipped_sum: f64 = v.iter().map(|x| x.clamp(0.0, 1.0)).sum();
    if clipped_sum <= budget {
        for x in v.iter_mut() {
            *x = x.clamp(0.0, 1.0);
        }
        return;
    }
    debug_assert!(budget >= 0.0);
    let mut events: Vec<(f64, f64)> = Vec::with_capacity(2 * v.len());
    for &x in v.iter() {
        events.push((x, 1.0));
        events.push((x - 1.0, -1.0));
    }
    events.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut theta = events[0].0;
    let mut sum = 0.0;
    let mut slope = 0.0;
    for &(at, delta) in &events {
        let seg = theta - at;
        if slope > 0.0 && sum + slope * seg >= budget {
            theta -= (budget - sum) / slope;
            for x in v.iter_mut() {
                *x = (*x - theta).clamp(0.0, 1.0);
            }
            return;
        }
        sum += slope * seg;
        theta = at;
        slope += delta;
    }
    // The budget is below the clipped sum, so the sweep always crosses it;
    // reaching here means accumulated rounding error. Clamp at the final
    // breakpoint.
    for x in v.iter_mut() {
        *x = (*x - theta).clamp(0.0, 1.0);
    }
}
