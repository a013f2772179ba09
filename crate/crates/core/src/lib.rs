//! graphprop: a graph-propagation engine built around explicit message-passing
//! schedules.
//!
//! The crate provides:
//! - a directed typed multigraph with derived views ([`graph`]),
//! - partitioners: multi-seed flood fill, spectral normalized cut, random
//!   edge phases ([`partition`]),
//! - schedule constructors: synchronous, partition-alternating, sequential
//!   BFS-DAG, spanning-tree sequences, random phases ([`schedule`]),
//! - an exact broadcast simulator with closed-form chain analysis
//!   ([`broadcast`]),
//! - a from-scratch GNN (typed messages, GRU updates, BPTT, Adam) executed
//!   under any schedule ([`gnn`]),
//! - dataset ingestion, synthetic benchmarks and the experiment layer
//!   ([`harness`]).
//!
//! All randomness flows from explicit `u64` seeds; identical inputs give
//! byte-identical outputs regardless of thread count.

#![allow(clippy::needless_range_loop)]

pub mod broadcast;
pub mod generators;
pub mod gnn;
pub mod graph;
pub mod harness;
pub mod linalg;
pub mod partition;
pub mod rng;
pub mod schedule;

pub use broadcast::{simulate_broadcast, BroadcastState, ChainFormulaReport};
pub use graph::{Edge, EdgeId, Graph, GraphError, NodeId, PartitionView};
pub use partition::{
    flood_fill_partition, partition_stats, random_edge_phases, spectral_partition, Partition,
    PartitionError, PartitionMethod,
};
pub use rng::Rng;
pub use schedule::{
    mst_schedule, partition_schedule, random_phase_schedule, sequential_schedule,
    synchronous_schedule, Schedule, ScheduleError, ScheduleKind,
};
