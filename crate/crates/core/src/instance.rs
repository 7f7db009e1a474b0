//! Problem instances: network, commodities, fine, inspection budget, and
//! inspection strategies, with JSON (de)serialization.
//!
//! File schema for instances:
//!
//! ```json
//! {
//!   "nodes": ["s", "v", "t"],
//!   "edges": [{"id": 0, "tail": "s", "head": "v", "cost": 0.0}],
//!   "commodities": [{"source": "s", "target": "t", "demand": 1.0, "ticket": 1.0}],
//!   "fine": 2.0,
//!   "budget": 1.0
//! }
//! ```
//!
//! Strategies are sparse: `{"probabilities": [{"edge": 0, "p": 0.5}]}`,
//! edges not listed carry probability 0.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::graph::{cost_weights, distances_to, Edge, EdgeId, GraphError, Network, NodeId};
use crate::tol::VALUE_EPS;

/// One origin-destination pair with demand and (fixed-fare) ticket price.
#[derive(Debug, Clone, PartialEq)]
pub struct Commodity {
    pub source: NodeId,
    pub target: NodeId,
    pub demand: f64,
    pub ticket: f64,
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub network: Network,
    pub commodities: Vec<Commodity>,
    pub fine: f64,
    pub budget: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum InstanceError {
    #[error("instance file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("edge {edge}: unknown node name {name:?}")]
    UnknownNode { edge: EdgeId, name: String },
    #[error("duplicate node name {0:?}")]
    DuplicateNode(String),
    #[error("commodity {index}: unknown node name {name:?}")]
    UnknownCommodityNode { index: usize, name: String },
    #[error("commodity {index}: demand {demand} is not a nonnegative finite number")]
    BadDemand { index: usize, demand: f64 },
    #[error("commodity {index}: ticket price {ticket} exceeds fine {fine}")]
    TicketExceedsFine { index: usize, ticket: f64, fine: f64 },
    #[error("commodity {index}: ticket price {ticket} is not a nonnegative finite number")]
    BadTicket { index: usize, ticket: f64 },
    #[error("commodity {index}: target {target:?} is unreachable from source {from:?}")]
    Unreachable { index: usize, from: String, target: String },
    #[error("commodity {index}: source equals target ({node:?})")]
    Loop { index: usize, node: String },
    #[error("fine {0} is not a nonnegative finite number")]
    BadFine(f64),
    #[error("budget {0} is not a nonnegative finite number")]
    BadBudget(f64),
    #[error("edge {edge}: probability {p} outside [0, 1]")]
    BadProbability { edge: EdgeId, p: f64 },
    #[error("strategy mass {mass} exceeds budget {budget}")]
    BudgetExceeded { mass: f64, budget: f64 },
}

impl Instance {
    /// Validates all instance invariants: finite nonnegative fine, budget,
    /// demands and tickets; tickets not above the fine; every commodity
    /// target reachable from its source.
    pub fn new(
        network: Network,
        commodities: Vec<Commodity>,
        fine: f64,
        budget: f64,
    ) -> Result<Self, InstanceError> {
        if !(fine.is_finite() && fine >= 0.0) {
            return Err(InstanceError::BadFine(fine));
        }
        if !(budget.is_finite() && budget >= 0.0) {
            return Err(InstanceError::BadBudget(budget));
        }
        let weights = cost_weights(&network);
        for (index, c) in commodities.iter().enumerate() {
            if !(c.demand.is_finite() && c.demand >= 0.0) {
                return Err(InstanceError::BadDemand { index, demand: c.demand });
            }
            if !(c.ticket.is_finite() && c.ticket >= 0.0) {
                return Err(InstanceError::BadTicket { index, ticket: c.ticket });
            }
            if c.ticket > fine + VALUE_EPS {
                return Err(InstanceError::TicketExceedsFine { index, ticket: c.ticket, fine });
            }
            if c.source == c.target {
                return Err(InstanceError::Loop {
                    index,
                    node: network.node_name(c.source).to_string(),
                });
            }
            // Reachability under costs; infinite distance means no path.
            let dist = distances_to(&network, &weights, c.target);
            if !dist[c.source].is_finite() {
                return Err(InstanceError::Unreachable {
                    index,
                    from: network.node_name(c.source).to_string(),
                    target: network.node_name(c.target).to_string(),
                });
            }
        }
        Ok(Instance { network, commodities, fine, budget })
    }

    /// Same instance with a different inspection budget.
    pub fn with_budget(&self, budget: f64) -> Instance {
        let mut inst = self.clone();
        inst.budget = budget;
        inst
    }
}

/// Edge inspection probabilities, indexed by edge id. Kept dense because
/// solvers touch every edge; serialized sparsely.
#[derive(Debug, Clone, PartialEq)]
pub struct InspectionStrategy {
    probs: Vec<f64>,
}

impl InspectionStrategy {
    pub fn zeros(edge_count: usize) -> Self {
        InspectionStrategy { probs: vec![0.0; edge_count] }
    }

    /// Builds from `(edge, p)` pairs; unlisted edges get 0.
    pub fn from_pairs(
        edge_count: usize,
        pairs: &[(EdgeId, f64)],
    ) -> Result<Self, InstanceError> {
        let mut s = Self::zeros(edge_count);
        for &(edge, p) in pairs {
            if edge >= edge_count {
                return Err(InstanceError::BadProbability { edge, p });
            }
            s.set(edge, p)?;
        }
        Ok(s)
    }

    pub fn from_dense(probs: Vec<f64>) -> Result<Self, InstanceError> {
        for (edge, &p) in probs.iter().enumerate() {
            if !(p.is_finite() && (-VALUE_EPS..=1.0 + VALUE_EPS).contains(&p)) {
                return Err(InstanceError::BadProbability { edge, p });
            }
        }
        let probs = probs.into_iter().map(|p| p.clamp(0.0, 1.0)).collect();
        Ok(InspectionStrategy { probs })
    }

    pub fn set(&mut self, edge: EdgeId, p: f64) -> Result<(), InstanceError> {
        if !(p.is_finite() && (-VALUE_EPS..=1.0 + VALUE_EPS).contains(&p)) {
            return Err(InstanceError::BadProbability { edge, p });
        }
        self.probs[edge] = p.clamp(0.0, 1.0);
        Ok(())
    }

    pub fn p(&self, edge: EdgeId) -> f64 {
        self.probs[edge]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn edge_count(&self) -> usize {
        self.probs.len()
    }

    /// Total inspection mass.
    pub fn mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Checks the budget constraint (with tolerance) of the given instance.
    pub fn validate_feasible(&self, instance: &Instance) -> Result<(), InstanceError> {
        let mass = self.mass();
        if mass > instance.budget + VALUE_EPS {
            return Err(InstanceError::BudgetExceeded { mass, budget: instance.budget });
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// File formats

#[derive(Serialize, Deserialize)]
struct EdgeFile {
    id: EdgeId,
    tail: String,
    head: String,
    cost: f64,
}

#[derive(Serialize, Deserialize)]
struct CommodityFile {
    source: String,
    target: String,
    demand: f64,
    ticket: f64,
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    nodes: Vec<String>,
    edges: Vec<EdgeFile>,
    commodities: Vec<CommodityFile>,
    fine: f64,
    budget: f64,
}

#[derive(Serialize, Deserialize)]
struct StrategyEntry {
    edge: EdgeId,
    p: f64,
}

#[derive(Serialize, Deserialize)]
struct StrategyFile {
    probabilities: Vec<StrategyEntry>,
}

/// Parses and validates an instance from JSON.
pub fn load_instance(reader: impl Read) -> Result<Instance, InstanceError> {
    let file: InstanceFile = serde_json::from_reader(reader)?;
    instance_from_file(file)
}

pub fn load_instance_str(text: &str) -> Result<Instance, InstanceError> {
    let file: InstanceFile = serde_json::from_str(text)?;
    instance_from_file(file)
}

fn instance_from_file(file: InstanceFile) -> Result<Instance, InstanceError> {
    for (i, name) in file.nodes.iter().enumerate() {
        if file.nodes[..i].contains(name) {
            return Err(InstanceError::DuplicateNode(name.clone()));
        }
    }
    let index_of = |name: &str| file.nodes.iter().position(|n| n == name);
    let mut edges = Vec::with_capacity(file.edges.len());
    // Files may list edges in any order; ids must still be dense.
    let mut sorted = file.edges;
    sorted.sort_by_key(|e| e.id);
    for e in sorted {
        let tail = index_of(&e.tail)
            .ok_or_else(|| InstanceError::UnknownNode { edge: e.id, name: e.tail.clone() })?;
        let head = index_of(&e.head)
            .ok_or_else(|| InstanceError::UnknownNode { edge: e.id, name: e.head.clone() })?;
        edges.push(Edge { id: e.id, tail, head, cost: e.cost });
    }
    let mut commodities = Vec::with_capacity(file.commodities.len());
    for (index, c) in file.commodities.iter().enumerate() {
        let source = index_of(&c.source).ok_or_else(|| InstanceError::UnknownCommodityNode {
            index,
            name: c.source.clone(),
        })?;
        let target = index_of(&c.target).ok_or_else(|| InstanceError::UnknownCommodityNode {
            index,
            name: c.target.clone(),
        })?;
        commodities.push(Commodity { source, target, demand: c.demand, ticket: c.ticket });
    }
    let network = Network::new(file.nodes, edges)?;
    Instance::new(network, commodities, file.fine, file.budget)
}

/// Serializes an instance to pretty JSON.
pub fn save_instance(instance: &Instance, mut writer: impl Write) -> Result<(), InstanceError> {
    let net = &instance.network;
    let file = InstanceFile {
        nodes: net.node_names().to_vec(),
        edges: net
            .edges()
            .iter()
            .map(|e| EdgeFile {
                id: e.id,
                tail: net.node_name(e.tail).to_string(),
                head: net.node_name(e.head).to_string(),
                cost: e.cost,
            })
            .collect(),
        commodities: instance
            .commodities
            .iter()
            .map(|c| CommodityFile {
                source: net.node_name(c.source).to_string(),
                target: net.node_name(c.target).to_string(),
                demand: c.demand,
                ticket: c.ticket,
            })
            .collect(),
        fine: instance.fine,
        budget: instance.budget,
    };
    serde_json::to_writer_pretty(&mut writer, &file)?;
    writer.write_all(b"\n")?;
    Ok(())
}

pub fn save_instance_string(instance: &Instance) -> String {
    let mut buf = Vec::new();
    save_instance(instance, &mut buf).expect("in-memory serialization cannot fail");
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

/// Parses a sparse strategy file; `edge_count` comes from the instance the
/// strategy belongs to.
pub fn load_strategy(reader: impl Read, edge_count: usize) -> Result<InspectionStrategy, InstanceError> {
    let file: StrategyFile = serde_json::from_reader(reader)?;
    let pairs: Vec<(EdgeId, f64)> = file.probabilities.iter().map(|e| (e.edge, e.p)).collect();
    InspectionStrategy::from_pairs(edge_count, &pairs)
}

/// Serializes a strategy sparsely: only edges with positive probability.
pub fn save_strategy(strategy: &InspectionStrategy, mut writer: impl Write) -> Result<(), InstanceError> {
    let file = StrategyFile {
        probabilities: strategy
            .probabilities()
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(edge, &p)| StrategyEntry { edge, p })
            .collect(),
    };
    serde_json::to_writer_pretty(&mut writer, &file)?;
    writer.write_all(b"\n")?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Shared example instances

/// Small handcrafted instances used in documentation and tests, plus
/// seeded random families for oracle-style cross checks.
pub mod samples {
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    /// Three nodes s, v, t; one arc s->v (cost 0) and two parallel arcs
    /// v->t (costs 0 and 1). Fine 2, one unit-demand commodity s->t with
    /// ticket 1.4. The companion strategy inspects s->v with probability
    /// 1/2 and the free v->t arc always.
    ///
    /// With that strategy both s-t routes cost 2 for a passenger that
    /// commits upfront, while re-routing after the s->v inspection yields
    /// expected cost 3/2: the classic adaptivity gap of 4/3.
    pub fn parallel_arcs() -> (Instance, InspectionStrategy) {
        let network = Network::new(
            vec!["s".into(), "v".into(), "t".into()],
            vec![
                Edge { id: 0, tail: 0, head: 1, cost: 0.0 },
                Edge { id: 1, tail: 1, head: 2, cost: 0.0 },
                Edge { id: 2, tail: 1, head: 2, cost: 1.0 },
            ],
        )
        .unwrap();
        let instance = Instance::new(
            network,
            vec![Commodity { source: 0, target: 2, demand: 1.0, ticket: 1.4 }],
            2.0,
            1.5,
        )
        .unwrap();
        let strategy = InspectionStrategy::from_pairs(3, &[(0, 0.5), (1, 1.0)]).unwrap();
        (instance, strategy)
    }

    /// Directed cycle on `n` nodes with zero-cost edges, one unit-demand
    /// commodity per node travelling to its predecessor (a path of n-1
    /// edges), fine = ticket = 1, budget n/(n-1).
    pub fn cycle(n: usize) -> Instance {
        assert!(n >= 3);
        let names = (0..n).map(|i| format!("v{i}")).collect();
        let edges = (0..n)
            .map(|i| Edge { id: i, tail: i, head: (i + 1) % n, cost: 0.0 })
            .collect();
        let network = Network::new(names, edges).unwrap();
        let commodities = (0..n)
            .map(|i| Commodity {
                source: i,
                target: (i + n - 1) % n,
                demand: 1.0,
                ticket: 1.0,
            })
            .collect();
        Instance::new(network, commodities, 1.0, n as f64 / (n as f64 - 1.0)).unwrap()
    }

    fn random_cost(rng: &mut ChaCha8Rng) -> f64 {
        // A healthy share of zero-cost arcs keeps tie handling honest.
        if rng.random::<f64>() < 0.15 {
            0.0
        } else {
            rng.random_range(0.0..=2.0)
        }
    }

    /// Seeded random multigraph instance, small enough for brute-force
    /// oracles: 3 to 10 nodes kept strongly connected by a shuffled cycle,
    /// extra arcs with parallels allowed, and 1 to 4 commodities with
    /// tickets below the fine.
    pub fn random_instance(seed: u64) -> Instance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(3..=10);
        let mut perm: Vec<NodeId> = (0..n).collect();
        perm.shuffle(&mut rng);
        let mut edges = Vec::new();
        for i in 0..n {
            let cost = random_cost(&mut rng);
            edges.push(Edge { id: i, tail: perm[i], head: perm[(i + 1) % n], cost });
        }
        let extras = rng.random_range(n..=3 * n);
        for _ in 0..extras {
            let tail = rng.random_range(0..n);
            let mut head = rng.random_range(0..n);
            while head == tail {
                head = rng.random_range(0..n);
            }
            let cost = random_cost(&mut rng);
            edges.push(Edge { id: edges.len(), tail, head, cost });
        }
        let names = (0..n).map(|i| format!("v{i}")).collect();
        let network = Network::new(names, edges).unwrap();

        let fine = rng.random_range(1.5..=6.0);
        let k = rng.random_range(1..=4usize.min(n * (n - 1)));
        let mut seen = std::collections::HashSet::new();
        let mut commodities = Vec::with_capacity(k);
        while commodities.len() < k {
            let source = rng.random_range(0..n);
            let target = rng.random_range(0..n);
            if source == target || !seen.insert((source, target)) {
                continue;
            }
            let demand = rng.random_range(1.0..=10.0);
            let ticket = fine * rng.random_range(0.25..=1.0);
            commodities.push(Commodity { source, target, demand, ticket });
        }
        let budget = rng.random_range(0.25..=4.0);
        Instance::new(network, commodities, fine, budget).unwrap()
    }

    /// Budget-feasible random strategy for `instance`: roughly forty
    /// percent of the edges stay uninspected, the rest draw probabilities
    /// up to 0.95, and the whole vector is rescaled when its mass
    /// overshoots the budget.
    pub fn random_strategy(seed: u64, instance: &Instance) -> InspectionStrategy {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = instance.network.edge_count();
        let mut probs: Vec<f64> = (0..m)
            .map(|_| {
                if rng.random::<f64>() < 0.4 {
                    0.0
                } else {
                    rng.random_range(0.0..=0.95)
                }
            })
            .collect();
        let mass: f64 = probs.iter().sum();
        if mass > instance.budget {
            let scale = instance.budget / mass;
            for p in &mut probs {
                *p *= scale;
            }
        }
        InspectionStrategy::from_dense(probs).unwrap()
    }

    /// Seeded random two-terminal series-parallel instance with a single
    /// commodity from node 0 to node 1.
    pub fn random_series_parallel(seed: u64) -> Instance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let leaves = rng.random_range(2..=12);
        let mut nodes = 2;
        let mut edges = Vec::new();
        sp_grow(&mut rng, &mut nodes, &mut edges, 0, 1, leaves);
        let names = (0..nodes).map(|i| format!("v{i}")).collect();
        let network = Network::new(names, edges).unwrap();
        let fine = rng.random_range(1.5..=6.0);
        let ticket = fine * rng.random_range(0.25..=1.0);
        let commodities =
            vec![Commodity { source: 0, target: 1, demand: 1.0, ticket }];
        let budget = rng.random_range(0.25..=4.0);
        Instance::new(network, commodities, fine, budget).unwrap()
    }

    // Recursive series-parallel composition over a leaf budget; midpoints
    // are fresh nodes, so the result is two-terminal between s and t.
    fn sp_grow(
        rng: &mut ChaCha8Rng,
        nodes: &mut usize,
        edges: &mut Vec<Edge>,
        s: NodeId,
        t: NodeId,
        leaves: usize,
    ) {
        if leaves == 1 {
            let cost = random_cost(rng);
            edges.push(Edge { id: edges.len(), tail: s, head: t, cost });
            return;
        }
        let left = rng.random_range(1..leaves);
        if rng.random::<f64>() < 0.5 {
            let mid = *nodes;
            *nodes += 1;
            sp_grow(rng, nodes, edges, s, mid, left);
            sp_grow(rng, nodes, edges, mid, t, leaves - left);
        } else {
            sp_grow(rng, nodes, edges, s, t, left);
            sp_grow(rng, nodes, edges, s, t, leaves - left);
        }
    }
}
