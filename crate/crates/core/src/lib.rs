//! Fare inspection planning on transit networks.
//!
//! An operator places inspection probabilities on the edges of a directed
//! network, subject to a budget on the total probability mass. Passengers
//! travel between origin-destination pairs and either buy a ticket or risk
//! evading; evaders choose routes that trade off travel cost against the
//! expected fine. This crate contains:
//!
//! * the network / instance data model with JSON (de)serialization
//!   ([`graph`], [`instance`]),
//! * best-response solvers for evading passengers, both for passengers that
//!   commit to a route upfront and for passengers that re-route after an
//!   inspection ([`follower`]),
//! * solvers for the operator side: an LP-style upper bound, probability
//!   rounding, a multicut heuristic and a mass-shifting local search
//!   ([`leader`]),
//! * a random planar instance generator for benchmarking ([`generate`]).
//!
//! Costs, fines and budgets are nonnegative reals. Node ids in files are
//! strings; internally nodes and edges are dense indices.

pub mod follower;
pub mod generate;
pub mod graph;
pub mod instance;
pub mod leader;
pub mod tol;

mod heap;

pub use graph::{Edge, EdgeId, Network, NodeId, PathLabel};
pub use instance::{Commodity, InspectionStrategy, Instance, InstanceError};
