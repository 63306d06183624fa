//! A concurrent, unbounded, weighted, directed graph with non-blocking
//! vertex/edge updates and linearizable snapshot queries (BFS, SSSP with
//! negative-cycle detection, betweenness centrality).
//!
//! The vertex set is a resizable lock-free hash table of freezable sets;
//! each vertex owns a lock-free internal BST of outgoing weighted edges.
//! Queries take repeated partial snapshots and accept when two consecutive
//! collects match (or return the first collect in single-collect mode).
//!
//! The crate also ships the sequential reference implementation and
//! linearizability checker, the R-MAT workload generator, and the benchmark
//! harness behind the `bench` CLI.

pub mod edge_tree;
pub mod graph;
pub mod harness;
pub mod node;
pub mod oracle;
pub mod queries;
pub mod rmat;
pub mod snapshot;
pub mod types;
pub mod vertex_store;

pub use graph::{Graph, GraphConfig, ThreadToken};
pub use queries::{BcScores, BcSourcePass, BfsNode, BfsTree, SpEntry, SpTree};
pub use types::{
    ConsistencyMode, EdgeResult, GraphError, PutEdgeOutcome, QueryAbsent, QueryStats, VertexKey,
};
