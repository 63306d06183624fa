//! Shared domain types for the graph ADT.

use thiserror::Error;

/// Vertex keys come from a totally ordered 64-bit universe. The minimum and
/// maximum values are reserved as sentinels and rejected at the API boundary.
pub type VertexKey = i64;

/// Reserved low sentinel key.
pub const KEY_MIN_SENTINEL: VertexKey = i64::MIN;
/// Reserved high sentinel key.
pub const KEY_MAX_SENTINEL: VertexKey = i64::MAX;

/// Returns true for keys the public API accepts.
pub fn is_valid_key(key: VertexKey) -> bool {
    key != KEY_MIN_SENTINEL && key != KEY_MAX_SENTINEL
}

/// Result of an edge operation: a status plus the weight slot of the ADT
/// contract. `weight` is `f64::INFINITY` exactly when no weight is reported.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeResult {
    pub status: bool,
    pub weight: f64,
}

impl EdgeResult {
    pub fn new(status: bool, weight: f64) -> Self {
        EdgeResult { status, weight }
    }

    /// The `(false, inf)` result used by every validation-failure path.
    pub fn absent() -> Self {
        EdgeResult {
            status: false,
            weight: f64::INFINITY,
        }
    }
}

/// Outcome of an insert-or-update on an edge tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PutEdgeOutcome {
    /// A new edge node was published.
    Inserted,
    /// The edge existed with a different weight; carries the replaced weight.
    Updated(f64),
    /// The edge existed with exactly this weight; no mutation happened.
    UnchangedSameWeight,
}

/// Consistency mode for snapshot queries.
///
/// `Linearizable` repeats the partial-snapshot collection until two
/// consecutive collects match. `SingleCollect` returns the first collect
/// without validation and trades consistency for throughput.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConsistencyMode {
    #[default]
    Linearizable,
    SingleCollect,
}

/// Why a query returned no result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryAbsent {
    /// The query vertex was missing or logically removed at invocation.
    VertexMissing,
    /// Two consecutive matching collects both confirmed a reachable
    /// negative-weight cycle (SSSP only).
    NegativeCycle,
}

/// Per-query execution statistics surfaced to the benchmark harness.
#[derive(Debug, Clone, Copy, Default)]
pub struct QueryStats {
    /// Number of tree collects performed.
    pub collects: u64,
    /// True when a scan hook abandoned the query (starvation guard).
    pub aborted: bool,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("thread capacity {0} exhausted; no free slot")]
    ThreadCapacityExhausted(usize),
    #[error("key {0} is a reserved sentinel value")]
    SentinelKey(VertexKey),
    #[error("weight must be finite, got {0}")]
    NonFiniteWeight(f64),
    #[error("self loops are rejected: vertex {0}")]
    SelfLoop(VertexKey),
}
