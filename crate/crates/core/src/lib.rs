//! Deterministic simulator of the congested clique model together with two
//! distributed Steiner tree approximation pipelines and the exact sequential
//! oracles used to check them.
//!
//! Every node of the input graph is hosted by one processor of a complete
//! communication network. Processors run [`engine::NodeProgram`]s in lock-step
//! rounds and may send one bounded message per directed link per round; the
//! [`engine::Clique`] enforces that and counts rounds and messages exactly.
//!
//! The two pipelines differ only in how the shortest path forest is built:
//!
//! * [`steiner::stccm_a`] runs distributed min-plus APSP ([`apsp`]) and reads
//!   the forest off the distance rows and routing tables.
//! * [`steiner::stccm_b`] grows the forest by bounded relaxation from the
//!   terminals ([`spf::spf_b_run`]).
//!
//! Both then reweight the edges relative to the forest, build a minimum
//! spanning tree with the phase-based clique MST ([`mst`]) and prune it.
//!
//! The crate is `no_std` and needs only `alloc`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod apsp;
pub mod cost;
pub mod dsu;
pub mod engine;
pub mod generate;
pub mod graph;
pub mod mst;
pub mod oracles;
pub mod spf;
pub mod steiner;

pub use cost::Cost;
pub use engine::{Clique, EngineConfig, EngineError, RoundMetrics};
pub use graph::{Edge, GraphError, GraphMetrics, NodeId, WeightedGraph};
pub use steiner::{stccm_a, stccm_b, PipelineError, PipelineOptions, SteinerRun, SteinerTree};
