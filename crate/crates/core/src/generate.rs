//! Random planar transit instances for benchmarks.
//!
//! Networks are built by scattering stations uniformly in the unit square
//! and repeatedly linking a random station to its nearest neighbour that
//! can be reached without crossing an existing link. Every link becomes a
//! pair of directed edges whose cost is the euclidean length converted to
//! travel minutes and then to a money price, so edge costs, ticket prices
//! and fines all live on one scale.
//!
//! All randomness flows through a single seeded [`ChaCha8Rng`]; equal
//! configurations produce byte-identical instances.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{cost_weights, shortest_paths_from, Edge, Network, NodeId};
use crate::instance::{Commodity, Instance, InstanceError};

/// Knobs for one instance family. `seed` pins everything: node layout,
/// link order, commodity pairs and demands.
#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    pub n_nodes: usize,
    pub n_commodities: usize,
    /// Demands are drawn uniformly from this closed interval.
    pub demand_range: (f64, f64),
    /// Ticket price at distance zero.
    pub base_price: f64,
    /// Ticket price grows linearly up to `base_price + price_slope` for the
    /// pair realizing the network diameter.
    pub price_slope: f64,
    pub fine: f64,
    pub seed: u64,
    /// Budgets for sweep experiments; the first entry is used when a single
    /// instance is materialized.
    pub budgets: Vec<f64>,
    /// Travel time of a unit-length link in minutes. The default makes the
    /// square's diagonal an hour long.
    pub minutes_per_unit: f64,
    /// Fare per travel minute, so `cost = length * minutes * price`.
    pub price_per_minute: f64,
}

impl GeneratorConfig {
    pub fn new(n_nodes: usize, n_commodities: usize, seed: u64) -> Self {
        GeneratorConfig {
            n_nodes,
            n_commodities,
            demand_range: (1.0, 50.0),
            base_price: 1.0,
            price_slope: 2.0,
            fine: 6.0,
            seed,
            budgets: default_budget_sweep(),
            minutes_per_unit: 60.0 / std::f64::consts::SQRT_2,
            price_per_minute: 0.132,
        }
    }

    pub fn validate(&self) -> Result<(), GeneratorError> {
        if self.n_nodes < 2 {
            return Err(GeneratorError::TooFewNodes(self.n_nodes));
        }
        let available = self.n_nodes * (self.n_nodes - 1);
        if self.n_commodities > available {
            return Err(GeneratorError::TooManyCommodities {
                requested: self.n_commodities,
                available,
            });
        }
        let (lo, hi) = self.demand_range;
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
            return Err(GeneratorError::BadDemandRange { lo, hi });
        }
        if !(self.base_price.is_finite() && self.base_price >= 0.0)
            || !(self.price_slope.is_finite() && self.price_slope >= 0.0)
        {
            return Err(GeneratorError::BadPrices {
                base: self.base_price,
                slope: self.price_slope,
            });
        }
        // The dearest ticket must not beat the fine, otherwise evading
        // would dominate for some commodity no matter the strategy.
        if self.base_price + self.price_slope > self.fine {
            return Err(GeneratorError::TicketAboveFine {
                max_ticket: self.base_price + self.price_slope,
                fine: self.fine,
            });
        }
        if !(self.minutes_per_unit.is_finite() && self.minutes_per_unit >= 0.0)
            || !(self.price_per_minute.is_finite() && self.price_per_minute >= 0.0)
        {
            return Err(GeneratorError::BadCostScale {
                minutes: self.minutes_per_unit,
                price: self.price_per_minute,
            });
        }
        if self.budgets.is_empty() {
            return Err(GeneratorError::NoBudgets);
        }
        for &b in &self.budgets {
            if !(b.is_finite() && b >= 0.0) {
                return Err(GeneratorError::BadBudget(b));
            }
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GeneratorError {
    #[error("need at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("{requested} commodities requested but only {available} distinct ordered pairs exist")]
    TooManyCommodities { requested: usize, available: usize },
    #[error("demand range [{lo}, {hi}] is not a valid nonnegative interval")]
    BadDemandRange { lo: f64, hi: f64 },
    #[error("ticket prices need nonnegative finite base {base} and slope {slope}")]
    BadPrices { base: f64, slope: f64 },
    #[error("maximal ticket price {max_ticket} exceeds the fine {fine}")]
    TicketAboveFine { max_ticket: f64, fine: f64 },
    #[error("cost scale must be nonnegative and finite: {minutes} min/unit at {price} per minute")]
    BadCostScale { minutes: f64, price: f64 },
    #[error("budget list is empty")]
    NoBudgets,
    #[error("budget {0} is not a nonnegative finite number")]
    BadBudget(f64),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

/// A generated network together with its drawing. Positions index nodes;
/// `links` lists each undirected link once, realized as the directed edge
/// pair `2k` (a -> b) and `2k + 1` (b -> a).
#[derive(Debug, Clone)]
pub struct PlanarGraph {
    pub network: Network,
    pub positions: Vec<(f64, f64)>,
    pub links: Vec<(NodeId, NodeId)>,
}

/// A full instance plus the layout it was drawn from, for rendering and
/// for checking the embedding in tests.
#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub instance: Instance,
    pub positions: Vec<(f64, f64)>,
    pub links: Vec<(NodeId, NodeId)>,
}

/// Materializes the instance for `config`, using the first budget of the
/// sweep list. Layout, links, commodity pairs and demands are drawn from a
/// single stream seeded with `config.seed`, in that order.
pub fn generate_instance(config: &GeneratorConfig) -> Result<GeneratedInstance, GeneratorError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let planar = generate_planar(config, &mut rng);
    let commodities = generate_commodities(&planar.network, config, &mut rng)?;
    let budget = config.budgets[0];
    let instance = Instance::new(planar.network, commodities, config.fine, budget)?;
    Ok(GeneratedInstance { instance, positions: planar.positions, links: planar.links })
}

/// Scatters nodes uniformly and runs `3n - 6` link attempts: each attempt
/// draws a node, picks its nearest neighbour that it is not yet linked to,
/// and links the two unless the straight-line segment would cross an
/// existing link, in which case the attempt is simply spent. The wasted
/// attempts keep the edge count well below the planar bound. Leftover
/// components are then joined through the closest non-crossing
/// inter-component pairs, so the result is connected and the drawing stays
/// an embedding.
pub fn generate_planar(config: &GeneratorConfig, rng: &mut impl Rng) -> PlanarGraph {
    let n = config.n_nodes;
    assert!(n >= 2, "planar generator needs at least 2 nodes");

    let mut positions = Vec::with_capacity(n);
    for _ in 0..n {
        let x = rng.random::<f64>();
        let y = rng.random::<f64>();
        positions.push((x, y));
    }

    let mut links: Vec<(NodeId, NodeId)> = Vec::new();
    let mut link_set: HashSet<(NodeId, NodeId)> = HashSet::new();
    let attempts = 3 * n - 6;
    // Candidate scan order is (distance, index); reused across attempts.
    let mut order: Vec<NodeId> = Vec::with_capacity(n - 1);
    for _ in 0..attempts {
        let u = rng.random_range(0..n);
        order.clear();
        order.extend((0..n).filter(|&v| v != u));
        order.sort_by(|&a, &b| {
            dist2(positions[u], positions[a])
                .total_cmp(&dist2(positions[u], positions[b]))
                .then(a.cmp(&b))
        });
        let nearest = order
            .iter()
            .copied()
            .find(|&v| !link_set.contains(&(u.min(v), u.max(v))));
        let Some(v) = nearest else { continue };
        if crosses_any(u, v, &links, &positions) {
            continue;
        }
        let key = (u.min(v), u.max(v));
        link_set.insert(key);
        links.push(key);
    }

    // Join residual components through their geometrically closest pairs
    // that keep the drawing planar.
    loop {
        let comp = components(n, &links);
        let mut best: Option<(f64, NodeId, NodeId)> = None;
        for a in 0..n {
            for b in (a + 1)..n {
                if comp[a] == comp[b] || crosses_any(a, b, &links, &positions) {
                    continue;
                }
                let d = dist2(positions[a], positions[b]);
                if best.is_none_or(|(bd, ba, bb)| (d, a, b) < (bd, ba, bb)) {
                    best = Some((d, a, b));
                }
            }
        }
        match best {
            Some((_, a, b)) => {
                link_set.insert((a, b));
                links.push((a, b));
            }
            None => {
                let parts = comp.iter().collect::<HashSet<_>>().len();
                assert!(parts == 1, "no planar link joins the remaining {parts} components");
                break;
            }
        }
    }

    let mut edges = Vec::with_capacity(2 * links.len());
    for &(a, b) in &links {
        let cost =
            dist2(positions[a], positions[b]).sqrt() * config.minutes_per_unit * config.price_per_minute;
        edges.push(Edge { id: edges.len(), tail: a, head: b, cost });
        edges.push(Edge { id: edges.len(), tail: b, head: a, cost });
    }
    let node_names = (0..n).map(|i| format!("n{i}")).collect();
    let network = Network::new(node_names, edges).expect("generated edges are well formed");
    PlanarGraph { network, positions, links }
}

/// Draws `n_commodities` distinct ordered node pairs uniformly, then one
/// demand per pair. Ticket prices interpolate between `base_price` and
/// `base_price + price_slope` with the pair's shortest-path distance
/// relative to the network diameter, so long trips pay more but never more
/// than the fine.
pub fn generate_commodities(
    net: &Network,
    config: &GeneratorConfig,
    rng: &mut impl Rng,
) -> Result<Vec<Commodity>, GeneratorError> {
    let n = net.node_count();
    let available = n.saturating_mul(n.saturating_sub(1));
    if config.n_commodities > available {
        return Err(GeneratorError::TooManyCommodities {
            requested: config.n_commodities,
            available,
        });
    }

    let weights = cost_weights(net);
    let mut dist_rows = Vec::with_capacity(n);
    let mut max_sp = 0.0_f64;
    for s in 0..n {
        let (dist, _) = shortest_paths_from(net, &weights, s);
        for &d in &dist {
            if d.is_finite() && d > max_sp {
                max_sp = d;
            }
        }
        dist_rows.push(dist);
    }

    let mut chosen = HashSet::new();
    let mut pairs = Vec::with_capacity(config.n_commodities);
    while pairs.len() < config.n_commodities {
        let s = rng.random_range(0..n);
        let t = rng.random_range(0..n);
        if s != t && chosen.insert((s, t)) {
            pairs.push((s, t));
        }
    }

    let (lo, hi) = config.demand_range;
    let mut commodities = Vec::with_capacity(pairs.len());
    for (s, t) in pairs {
        let demand = rng.random_range(lo..=hi);
        let ratio = if max_sp > 0.0 { dist_rows[s][t] / max_sp } else { 0.0 };
        let ticket = config.base_price + config.price_slope * ratio;
        commodities.push(Commodity { source: s, target: t, demand, ticket });
    }
    Ok(commodities)
}

/// Copies of `instance` under each budget, for sweep experiments.
pub fn budget_sweep(instance: &Instance, budgets: &[f64]) -> Vec<Instance> {
    budgets.iter().map(|&b| instance.with_budget(b)).collect()
}

/// Twenty geometrically spaced budgets from 0.2 to 25, endpoints exact.
pub fn default_budget_sweep() -> Vec<f64> {
    const LEN: usize = 20;
    const LO: f64 = 0.2;
    const HI: f64 = 25.0;
    let ratio = (HI / LO).powf(1.0 / (LEN - 1) as f64);
    let mut budgets: Vec<f64> = (0..LEN).map(|i| LO * ratio.powi(i as i32)).collect();
    budgets[0] = LO;
    budgets[LEN - 1] = HI;
    budgets
}

fn dist2(a: (f64, f64), b: (f64, f64)) -> f64 {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    dx * dx + dy * dy
}

fn crosses_any(u: NodeId, v: NodeId, links: &[(NodeId, NodeId)], positions: &[(f64, f64)]) -> bool {
    links.iter().any(|&(a, b)| {
        // Links sharing a station only meet there; that is not a crossing.
        if a == u || a == v || b == u || b == v {
            return false;
        }
        segments_intersect(positions[u], positions[v], positions[a], positions[b])
    })
}

fn orient(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

// Collinear helper: whether c (known collinear with a-b) lies in the box.
fn on_segment(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> bool {
    c.0 >= a.0.min(b.0) && c.0 <= a.0.max(b.0) && c.1 >= a.1.min(b.1) && c.1 <= a.1.max(b.1)
}

/// Whether closed segments `p1p2` and `q1q2` share any point. Touching
/// counts as intersecting; callers exempt segments that share a station.
pub fn segments_intersect(
    p1: (f64, f64),
    p2: (f64, f64),
    q1: (f64, f64),
    q2: (f64, f64),
) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// Connected component id per node of the undirected link graph.
fn components(n: usize, links: &[(NodeId, NodeId)]) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in links {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut comp = vec![usize::MAX; n];
    let mut next = 0;
    let mut stack = Vec::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        comp[start] = next;
        stack.push(start);
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if comp[w] == usize::MAX {
                    comp[w] = next;
                    stack.push(w);
                }
            }
        }
        next += 1;
    }
    comp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::save_instance_string;

    #[test]
    fn two_nodes_become_one_bidirected_link() {
        let config = GeneratorConfig::new(2, 1, 3);
        let gen = generate_instance(&config).unwrap();
        let net = &gen.instance.network;
        assert_eq!(net.node_count(), 2);
        assert_eq!(net.edge_count(), 2);
        assert_eq!(gen.links.len(), 1);
        let expected = dist2(gen.positions[0], gen.positions[1]).sqrt()
            * config.minutes_per_unit
            * config.price_per_minute;
        assert!((net.edge(0).cost - expected).abs() < 1e-12);
        assert!((net.edge(1).cost - expected).abs() < 1e-12);
        assert_eq!(net.edge(0).tail, net.edge(1).head);
    }

    #[test]
    fn same_seed_reproduces_the_instance_byte_for_byte() {
        let config = GeneratorConfig::new(25, 10, 7);
        let a = generate_instance(&config).unwrap();
        let b = generate_instance(&config).unwrap();
        assert_eq!(save_instance_string(&a.instance), save_instance_string(&b.instance));
        assert_eq!(a.positions, b.positions);
        assert_eq!(a.links, b.links);

        let other = GeneratorConfig::new(25, 10, 8);
        let c = generate_instance(&other).unwrap();
        assert_ne!(save_instance_string(&a.instance), save_instance_string(&c.instance));
    }

    #[test]
    fn networks_are_connected_both_ways() {
        for seed in 0..10 {
            let config = GeneratorConfig::new(25, 5, seed);
            let gen = generate_instance(&config).unwrap();
            let net = &gen.instance.network;
            let weights = cost_weights(net);
            let (dist, _) = shortest_paths_from(net, &weights, 0);
            assert!(
                dist.iter().all(|d| d.is_finite()),
                "seed {seed}: node unreachable from n0"
            );
        }
    }

    #[test]
    fn drawings_are_planar_embeddings() {
        for seed in [0, 1, 2] {
            let config = GeneratorConfig::new(40, 5, seed);
            let gen = generate_instance(&config).unwrap();
            let links = &gen.links;
            for i in 0..links.len() {
                for j in (i + 1)..links.len() {
                    let (a, b) = links[i];
                    let (c, d) = links[j];
                    if a == c || a == d || b == c || b == d {
                        continue;
                    }
                    assert!(
                        !segments_intersect(
                            gen.positions[a],
                            gen.positions[b],
                            gen.positions[c],
                            gen.positions[d],
                        ),
                        "seed {seed}: links {i} and {j} cross"
                    );
                }
            }
        }
    }

    #[test]
    fn edge_counts_sit_near_the_planar_target() {
        // Reference density for 25 nodes is about 95 directed edges; each
        // seed should land within twenty percent of that.
        for seed in 0..5 {
            let config = GeneratorConfig::new(25, 5, seed);
            let gen = generate_instance(&config).unwrap();
            let m = gen.instance.network.edge_count();
            assert!((76..=114).contains(&m), "seed {seed}: {m} directed edges");
        }
    }

    #[test]
    fn tickets_grow_with_trip_length_and_stay_below_the_fine() {
        let config = GeneratorConfig::new(30, 20, 11);
        let gen = generate_instance(&config).unwrap();
        let inst = &gen.instance;
        let weights = cost_weights(&inst.network);
        let mut rows = Vec::new();
        for c in &inst.commodities {
            let (dist, _) = shortest_paths_from(&inst.network, &weights, c.source);
            rows.push((dist[c.target], c.ticket));
            assert!(c.ticket >= config.base_price - 1e-12);
            assert!(c.ticket <= config.fine + 1e-12);
            assert!(c.demand >= 1.0 && c.demand <= 50.0);
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in rows.windows(2) {
            assert!(w[1].1 >= w[0].1 - 1e-12, "ticket not monotone in distance");
        }
    }

    #[test]
    fn budget_sweep_spacing_is_geometric() {
        let budgets = default_budget_sweep();
        assert_eq!(budgets.len(), 20);
        assert_eq!(budgets[0], 0.2);
        assert_eq!(budgets[19], 25.0);
        let ratio = budgets[1] / budgets[0];
        for w in budgets.windows(2) {
            assert!(w[1] > w[0]);
            assert!((w[1] / w[0] - ratio).abs() < 1e-9);
        }
        let inst = crate::instance::samples::cycle(4);
        let swept = budget_sweep(&inst, &budgets);
        assert_eq!(swept.len(), 20);
        assert_eq!(swept[3].budget, budgets[3]);
        assert_eq!(swept[3].commodities.len(), inst.commodities.len());
    }

    #[test]
    fn rejects_impossible_commodity_counts() {
        let config = GeneratorConfig::new(3, 7, 0);
        match generate_instance(&config) {
            Err(GeneratorError::TooManyCommodities { requested: 7, available: 6 }) => {}
            other => panic!("expected TooManyCommodities, got {other:?}"),
        }
    }

    #[test]
    fn crossing_test_matches_hand_cases() {
        // An X crossing, a shared endpoint, a clean miss, and a T touch.
        assert!(segments_intersect((0.0, 0.0), (1.0, 1.0), (0.0, 1.0), (1.0, 0.0)));
        assert!(segments_intersect((0.0, 0.0), (1.0, 1.0), (1.0, 1.0), (2.0, 0.0)));
        assert!(!segments_intersect((0.0, 0.0), (1.0, 0.0), (0.0, 0.5), (1.0, 0.5)));
        assert!(segments_intersect((0.0, 0.0), (2.0, 0.0), (1.0, 0.0), (1.0, 1.0)));
    }
}
