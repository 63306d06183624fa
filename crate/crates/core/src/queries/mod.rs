//! Snapshot query specializations: BFS, SSSP and betweenness centrality.

mod bc;
mod bfs;
mod sssp;

pub use bc::{BcScores, BcSourcePass};
pub use bfs::{BfsNode, BfsTree};
pub use sssp::{SpEntry, SpTree};
