//! The nine-operation concurrent graph ADT.
//!
//! Vertex operations delegate to the freezable-set hash table; edge
//! operations validate both endpoints, then run against the source vertex's
//! edge tree, re-checking endpoint liveness inside the retry loop. Queries
//! live in [`crate::queries`].

use std::io::BufRead;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use crossbeam_epoch::{self as epoch, Guard};

use crate::edge_tree::{self, RemoveOutcome};
use crate::node::VNode;
use crate::types::{is_valid_key, EdgeResult, GraphError, PutEdgeOutcome, VertexKey};
use crate::vertex_store::{BucketTable, LoadFactorPolicy, ResizeHeuristic};

/// Construction-time settings.
pub struct GraphConfig {
    /// Number of thread slots; all per-thread arrays are sized to this.
    pub thread_capacity: usize,
    /// Initial bucket count, a power of two.
    pub initial_buckets: usize,
    /// Resize heuristic for the vertex table.
    pub resize_policy: Box<dyn ResizeHeuristic>,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            thread_capacity: 64,
            initial_buckets: 16,
            resize_policy: Box::new(LoadFactorPolicy::default()),
        }
    }
}

/// A claimed thread slot. Obtained from [`Graph::register`]; required by
/// every operation. The slot returns to the pool on drop.
pub struct ThreadToken<'g> {
    graph: &'g Graph,
    tid: usize,
    /// Thread-local visit counter, bumped at each collect start.
    pub(crate) cnt: std::cell::Cell<u64>,
}

impl ThreadToken<'_> {
    #[inline]
    pub fn tid(&self) -> usize {
        self.tid
    }

    pub(crate) fn next_collect_stamp(&self) -> u64 {
        let c = self.cnt.get() + 1;
        self.cnt.set(c);
        c
    }
}

impl Drop for ThreadToken<'_> {
    fn drop(&mut self) {
        self.graph.slots.lock().unwrap().push(self.tid);
    }
}

/// A concurrent, unbounded, weighted, directed graph supporting non-blocking
/// updates and snapshot queries.
pub struct Graph {
    pub(crate) table: BucketTable,
    thread_capacity: usize,
    slots: Mutex<Vec<usize>>,
    /// Monotone count of completed update operations, used by the harness to
    /// report interrupting updates per query.
    pub(crate) update_clock: AtomicU64,
    registered: AtomicUsize,
}

impl Default for Graph {
    fn default() -> Self {
        Graph::new(GraphConfig::default())
    }
}

impl Graph {
    pub fn new(config: GraphConfig) -> Graph {
        let slots = (0..config.thread_capacity).rev().collect();
        Graph {
            table: BucketTable::new(
                config.initial_buckets,
                config.thread_capacity,
                config.resize_policy,
            ),
            thread_capacity: config.thread_capacity,
            slots: Mutex::new(slots),
            update_clock: AtomicU64::new(0),
            registered: AtomicUsize::new(0),
        }
    }

    pub fn thread_capacity(&self) -> usize {
        self.thread_capacity
    }

    /// Claims a thread slot. Every operation requires a token; unregistered
    /// threads must not touch the graph.
    pub fn register(&self) -> Result<ThreadToken<'_>, GraphError> {
        let tid = self
            .slots
            .lock()
            .unwrap()
            .pop()
            .ok_or(GraphError::ThreadCapacityExhausted(self.thread_capacity))?;
        self.registered.fetch_add(1, Ordering::Relaxed);
        Ok(ThreadToken {
            graph: self,
            tid,
            cnt: std::cell::Cell::new(0),
        })
    }

    fn bump_update_clock(&self) {
        self.update_clock.fetch_add(1, Ordering::SeqCst);
    }

    /// Monotone count of completed update operations; the harness samples
    /// it to report interrupting updates per query.
    pub fn update_clock_now(&self) -> u64 {
        self.update_clock.load(Ordering::SeqCst)
    }

    /// The vertex's edge-operation counter: its exact count of successful
    /// edge adds, weight updates and removes. `None` when absent.
    pub fn edge_op_count(&self, _t: &ThreadToken<'_>, v: VertexKey) -> Option<u64> {
        let guard = epoch::pin();
        self.table.hash_contains(v, &guard).map(|n| n.ecnt())
    }

    /// Adds vertex `v`. True iff it was absent.
    pub fn put_vertex(&self, _t: &ThreadToken<'_>, v: VertexKey) -> bool {
        assert!(is_valid_key(v), "sentinel keys are reserved");
        let guard = epoch::pin();
        let r = self.table.hash_add(v, &guard);
        if r {
            self.bump_update_clock();
        }
        r
    }

    /// Removes vertex `v`. True iff it was present. Incident edges die with
    /// the vertex: readers skip them via the mark, and update traversals
    /// excise them lazily.
    pub fn remove_vertex(&self, _t: &ThreadToken<'_>, v: VertexKey) -> bool {
        if !is_valid_key(v) {
            return false;
        }
        let guard = epoch::pin();
        let r = self.table.hash_remove(v, &guard);
        if r {
            self.bump_update_clock();
        }
        r
    }

    /// True iff vertex `v` is present.
    pub fn get_vertex(&self, _t: &ThreadToken<'_>, v: VertexKey) -> bool {
        if !is_valid_key(v) {
            return false;
        }
        let guard = epoch::pin();
        self.table.hash_contains(v, &guard).is_some()
    }

    /// Validates both endpoints, returning their nodes when alive.
    fn con_v_plus_internal<'g>(
        &self,
        v1: VertexKey,
        v2: VertexKey,
        guard: &'g Guard,
    ) -> Option<(&'g Arc<VNode>, &'g Arc<VNode>)> {
        let u = self.table.hash_contains(v1, guard)?;
        let v = self.table.hash_contains(v2, guard)?;
        Some((u, v))
    }

    /// Endpoint-pair validation: `(u, v, true)` when both vertices are
    /// alive, `(None, None, false)` otherwise.
    pub fn con_v_plus(
        &self,
        _t: &ThreadToken<'_>,
        v1: VertexKey,
        v2: VertexKey,
    ) -> (Option<Arc<VNode>>, Option<Arc<VNode>>, bool) {
        if !is_valid_key(v1) || !is_valid_key(v2) || v1 == v2 {
            return (None, None, false);
        }
        let guard = epoch::pin();
        match self.con_v_plus_internal(v1, v2, &guard) {
            Some((u, v)) => (Some(u.clone()), Some(v.clone()), true),
            None => (None, None, false),
        }
    }

    /// Inserts or updates edge `(v1, v2 | w)` per the four-way contract:
    /// absent edge inserted -> `(true, inf)`; weight updated from z ->
    /// `(true, z)`; same weight present -> `(false, w)`; endpoint missing ->
    /// `(false, inf)`.
    pub fn put_edge(&self, _t: &ThreadToken<'_>, v1: VertexKey, v2: VertexKey, w: f64) -> EdgeResult {
        if !w.is_finite() || !is_valid_key(v1) || !is_valid_key(v2) || v1 == v2 {
            return EdgeResult::absent();
        }
        let guard = epoch::pin();
        let (u, v) = match self.con_v_plus_internal(v1, v2, &guard) {
            Some(pair) => pair,
            None => return EdgeResult::absent(),
        };
        let outcome = edge_tree::insert_or_update(
            u,
            v2,
            w,
            v,
            || !u.is_marked() && !v.is_marked(),
            &guard,
        );
        match outcome {
            None => EdgeResult::absent(),
            Some(PutEdgeOutcome::Inserted) => {
                self.bump_update_clock();
                EdgeResult::new(true, f64::INFINITY)
            }
            Some(PutEdgeOutcome::Updated(z)) => {
                self.bump_update_clock();
                EdgeResult::new(true, z)
            }
            Some(PutEdgeOutcome::UnchangedSameWeight) => EdgeResult::new(false, w),
        }
    }

    /// Removes edge `(v1, v2)`: `(true, w)` when present, `(false, inf)`
    /// otherwise.
    pub fn remove_edge(&self, _t: &ThreadToken<'_>, v1: VertexKey, v2: VertexKey) -> EdgeResult {
        if !is_valid_key(v1) || !is_valid_key(v2) || v1 == v2 {
            return EdgeResult::absent();
        }
        let guard = epoch::pin();
        let (u, v) = match self.con_v_plus_internal(v1, v2, &guard) {
            Some(pair) => pair,
            None => return EdgeResult::absent(),
        };
        let outcome = edge_tree::remove(u, v2, || !u.is_marked() && !v.is_marked(), &guard);
        match outcome {
            None | Some(RemoveOutcome::NotFound) => EdgeResult::absent(),
            Some(RemoveOutcome::Removed(w)) => {
                self.bump_update_clock();
                EdgeResult::new(true, w)
            }
        }
    }

    /// Reads edge `(v1, v2)` without helping: `(true, w)` when present,
    /// `(false, inf)` otherwise. Re-checks both endpoints after the tree
    /// lookup, so an edge into a dead vertex is never reported.
    pub fn get_edge(&self, _t: &ThreadToken<'_>, v1: VertexKey, v2: VertexKey) -> EdgeResult {
        if !is_valid_key(v1) || !is_valid_key(v2) || v1 == v2 {
            return EdgeResult::absent();
        }
        let guard = epoch::pin();
        let (u, v) = match self.con_v_plus_internal(v1, v2, &guard) {
            Some(pair) => pair,
            None => return EdgeResult::absent(),
        };
        match edge_tree::read_weight(&u.enxt, v2, &guard) {
            Some(w) if !u.is_marked() && !v.is_marked() => EdgeResult::new(true, w),
            _ => EdgeResult::absent(),
        }
    }

    /// Validates a put_edge argument set, surfacing the reason.
    pub fn validate_edge_args(v1: VertexKey, v2: VertexKey, w: f64) -> Result<(), GraphError> {
        if !is_valid_key(v1) {
            return Err(GraphError::SentinelKey(v1));
        }
        if !is_valid_key(v2) {
            return Err(GraphError::SentinelKey(v2));
        }
        if v1 == v2 {
            return Err(GraphError::SelfLoop(v1));
        }
        if !w.is_finite() {
            return Err(GraphError::NonFiniteWeight(w));
        }
        Ok(())
    }

    /// All alive vertex keys, sorted. Exact under quiescence.
    pub fn vertex_keys(&self, _t: &ThreadToken<'_>) -> Vec<VertexKey> {
        let guard = epoch::pin();
        let mut keys: Vec<VertexKey> = self
            .table
            .collect_vertices(&guard)
            .iter()
            .map(|v| v.key)
            .collect();
        keys.sort_unstable();
        keys
    }

    /// All alive out-edges of `v`, in key order. Exact under quiescence.
    pub fn out_edges(&self, _t: &ThreadToken<'_>, v: VertexKey) -> Vec<(VertexKey, f64)> {
        let guard = epoch::pin();
        let mut out = Vec::new();
        if let Some(u) = self.table.hash_contains(v, &guard) {
            edge_tree::in_order_collect(&u.enxt, &guard, |e| {
                if !e.dest.is_marked() {
                    out.push((e.key, e.weight));
                }
            });
        }
        out
    }

    /// Bulk-load from the adjacency text format: header `V E`, then one
    /// `src dst [weight]` line per edge. Vertices `0..V-1` are created.
    pub fn load_adjacency<R: BufRead>(
        &self,
        t: &ThreadToken<'_>,
        reader: R,
    ) -> Result<(usize, usize), crate::rmat::AdjacencyError> {
        let parsed = crate::rmat::read_adjacency(reader)?;
        for v in 0..parsed.n_vertices {
            self.put_vertex(t, v as VertexKey);
        }
        for e in &parsed.edges {
            self.put_edge(t, e.src, e.dst, e.weight.unwrap_or(1.0));
        }
        Ok((parsed.n_vertices, parsed.edges.len()))
    }

    /// Quiescent structural checks: bucket invariants, BST key order and
    /// descriptor completion on every alive vertex's edge tree.
    pub fn check_structural_invariants(&self, _t: &ThreadToken<'_>) -> Result<(), String> {
        let guard = epoch::pin();
        self.table.check_bucket_invariants(&guard)?;
        for v in self.table.collect_vertices(&guard) {
            if !edge_tree::assert_no_pending_descriptors(&v.enxt, &guard) {
                return Err(format!("vertex {} has a pending descriptor", v.key));
            }
            let mut last: Option<VertexKey> = None;
            let mut ordered = true;
            edge_tree::in_order_collect(&v.enxt, &guard, |e| {
                if let Some(p) = last {
                    if p >= e.key {
                        ordered = false;
                    }
                }
                last = Some(e.key);
            });
            if !ordered {
                return Err(format!("vertex {} edge tree out of order", v.key));
            }
        }
        Ok(())
    }
}
