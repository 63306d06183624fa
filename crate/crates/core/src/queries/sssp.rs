//! Single-source shortest paths with negative-cycle detection.
//!
//! Each collect is a queue-driven relaxation pass: the BFS expansion of the
//! framework collect, gated on successful relaxation, with a vertex whose
//! distance improves after its first visit patched in place (distance slot
//! and parent link) and re-enqueued so the improvement propagates. The pass
//! starts by sweeping every alive vertex's distance slot to infinity and
//! ends with a probe over every collected vertex's out-edges: any edge that
//! still relaxes means the pass did not converge, which after the enqueue
//! bound below can only be caused by a reachable negative cycle.
//!
//! A reachable negative cycle would re-enqueue vertices forever, so a pass
//! aborts with a cycle verdict once any vertex has been enqueued more times
//! than the alive-vertex count. The scan accepts two consecutive matching
//! collects with equal verdicts: both clean yields the distances, both
//! cyclic yields the negative-cycle report, and any mixed pair retries.

use std::collections::{HashMap, VecDeque};

use crossbeam_epoch as epoch;
use crossbeam_epoch::Guard;

use crate::edge_tree;
use crate::graph::{Graph, ThreadToken};
use crate::node::VNode;
use crate::snapshot::{self, ScanHooks, SnapChain, SnapNode};
use crate::types::{ConsistencyMode, QueryAbsent, QueryStats, VertexKey};

/// One reached vertex: shortest-path distance and tree parent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpEntry {
    pub key: VertexKey,
    pub dist: f64,
    pub parent: Option<VertexKey>,
}

/// Shortest-path tree in visit order. Vertices absent from the tree are
/// unreachable (distance infinity).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SpTree {
    pub entries: Vec<SpEntry>,
}

impl SpTree {
    /// (key, dist) pairs sorted by key.
    pub fn distances(&self) -> Vec<(VertexKey, f64)> {
        let mut v: Vec<_> = self.entries.iter().map(|e| (e.key, e.dist)).collect();
        v.sort_by_key(|a| a.0);
        v
    }

    pub fn dist_of(&self, key: VertexKey) -> Option<f64> {
        self.entries.iter().find(|e| e.key == key).map(|e| e.dist)
    }
}

/// Relaxation step: if `dist[u] + w < dist[v]` in this thread's slots, assign
/// and report true. Infinity arithmetic saturates.
#[inline]
fn relax(tid: usize, u: &VNode, v: &VNode, w: f64) -> bool {
    let du = unsafe { *u.oi.dist.get(tid) };
    let dv = unsafe { *v.oi.dist.get(tid) };
    let cand = du + w;
    if dv > cand {
        unsafe { *v.oi.dist.get_mut(tid) = cand };
        true
    } else {
        false
    }
}

/// Sets every alive vertex's distance slot to infinity for this collect.
fn init_distances(graph: &Graph, tid: usize, guard: &Guard) -> usize {
    let vertices = graph.table.collect_vertices(guard);
    for v in &vertices {
        unsafe { *v.oi.dist.get_mut(tid) = f64::INFINITY };
    }
    vertices.len()
}

struct SpCollect {
    chain: SnapChain,
    neg_cycle: bool,
}

/// Probe pass: true iff any out-edge of a collected vertex still relaxes.
/// May perform one more relaxation; the caller discards distances whenever
/// this returns true.
fn check_neg_cycle(tid: usize, chain: &SnapChain, guard: &Guard) -> bool {
    for sn in &chain.nodes {
        let cvn = unsafe { &*sn.vertex };
        if cvn.is_marked() {
            continue;
        }
        let mut relaxed = false;
        edge_tree::in_order_collect(&cvn.enxt, guard, |e| {
            if !relaxed && !e.dest.is_marked() && relax(tid, cvn, e.dest, e.weight) {
                relaxed = true;
            }
        });
        if relaxed {
            return true;
        }
    }
    false
}

fn sp_tree_collect(
    graph: &Graph,
    source: &std::sync::Arc<VNode>,
    token: &ThreadToken<'_>,
    guard: &Guard,
) -> SpCollect {
    let tid = token.tid();
    let alive = init_distances(graph, tid, guard);
    let cnt = token.next_collect_stamp();
    let enqueue_bound = (alive as u32).saturating_add(2);

    let mut chain = SnapChain::default();
    let mut index_of: HashMap<*const VNode, usize> = HashMap::new();
    let mut enqueues: Vec<u32> = Vec::new();
    let mut in_queue: Vec<bool> = Vec::new();
    let mut queue: VecDeque<usize> = VecDeque::new();

    snapshot::stamp_visit(source, tid, cnt);
    unsafe { *source.oi.dist.get_mut(tid) = 0.0 };
    chain.nodes.push(SnapNode {
        vertex: std::sync::Arc::as_ptr(source),
        parent: None,
        ecnt_stamp: source.ecnt(),
    });
    index_of.insert(std::sync::Arc::as_ptr(source), 0);
    enqueues.push(1);
    in_queue.push(true);
    queue.push_back(0);

    let mut bound_tripped = false;
    'drain: while let Some(ci) = queue.pop_front() {
        in_queue[ci] = false;
        let cvn = unsafe { &*chain.nodes[ci].vertex };
        if cvn.is_marked() {
            continue;
        }
        let chain = &mut chain;
        let queue = &mut queue;
        let index_of = &mut index_of;
        let enqueues = &mut enqueues;
        let in_queue = &mut in_queue;
        let mut tripped = false;
        edge_tree::in_order_collect(&cvn.enxt, guard, |e| {
            if tripped {
                return;
            }
            let adjn = e.dest;
            if adjn.is_marked() {
                return;
            }
            if relax(tid, cvn, adjn, e.weight) {
                if !snapshot::chk_visit(adjn, tid, cnt) {
                    snapshot::stamp_visit(adjn, tid, cnt);
                    let idx = chain.nodes.len();
                    chain.nodes.push(SnapNode {
                        vertex: std::sync::Arc::as_ptr(adjn),
                        parent: Some(ci),
                        ecnt_stamp: adjn.ecnt(),
                    });
                    index_of.insert(std::sync::Arc::as_ptr(adjn), idx);
                    enqueues.push(1);
                    in_queue.push(true);
                    queue.push_back(idx);
                } else if let Some(&idx) = index_of.get(&std::sync::Arc::as_ptr(adjn)) {
                    // Already visited and relaxed further: patch the tree
                    // entry in place and re-enqueue so the improvement
                    // propagates to its out-edges.
                    chain.nodes[idx].parent = Some(ci);
                    if !in_queue[idx] {
                        enqueues[idx] += 1;
                        if enqueues[idx] > enqueue_bound {
                            tripped = true;
                            return;
                        }
                        in_queue[idx] = true;
                        queue.push_back(idx);
                    }
                }
            }
        });
        if tripped {
            bound_tripped = true;
            break 'drain;
        }
    }

    let neg_cycle = bound_tripped || check_neg_cycle(tid, &chain, guard);
    SpCollect { chain, neg_cycle }
}

fn extract(tid: usize, chain: &SnapChain) -> SpTree {
    let entries = chain
        .nodes
        .iter()
        .map(|sn| {
            let v = unsafe { &*sn.vertex };
            SpEntry {
                key: v.key,
                dist: unsafe { *v.oi.dist.get(tid) },
                parent: sn.parent.map(|p| unsafe { &*chain.nodes[p].vertex }.key),
            }
        })
        .collect();
    SpTree { entries }
}

impl Graph {
    /// Shortest-path distances from `v`, or the reason no result exists.
    pub fn sssp(&self, t: &ThreadToken<'_>, v: VertexKey) -> Result<SpTree, QueryAbsent> {
        self.sssp_with(t, v, ConsistencyMode::Linearizable, &mut ScanHooks::default())
            .0
    }

    pub fn sssp_with(
        &self,
        t: &ThreadToken<'_>,
        v: VertexKey,
        mode: ConsistencyMode,
        hooks: &mut ScanHooks<'_>,
    ) -> (Result<SpTree, QueryAbsent>, QueryStats) {
        let guard = epoch::pin();
        let source = match self.table.hash_contains(v, &guard) {
            Some(s) if !s.is_marked() => s.clone(),
            _ => return (Err(QueryAbsent::VertexMissing), QueryStats::default()),
        };

        let mut old = sp_tree_collect(self, &source, t, &guard);
        let mut collects = 1u64;
        if mode == ConsistencyMode::SingleCollect {
            let stats = QueryStats { collects, aborted: false };
            let out = if old.neg_cycle {
                Err(QueryAbsent::NegativeCycle)
            } else {
                Ok(extract(t.tid(), &old.chain))
            };
            return (out, stats);
        }
        loop {
            if !hooks
                .between_collects
                .as_mut()
                .map(|f| f(collects))
                .unwrap_or(true)
            {
                return (
                    Err(QueryAbsent::VertexMissing),
                    QueryStats {
                        collects,
                        aborted: true,
                    },
                );
            }
            let new = sp_tree_collect(self, &source, t, &guard);
            collects += 1;
            let trees_match = snapshot::cmp_tree(&old.chain, &new.chain);
            if !old.neg_cycle && !new.neg_cycle && trees_match {
                if source.is_marked() {
                    return (Err(QueryAbsent::VertexMissing), QueryStats { collects, aborted: false });
                }
                return (Ok(extract(t.tid(), &new.chain)), QueryStats { collects, aborted: false });
            }
            if old.neg_cycle && new.neg_cycle && trees_match {
                return (Err(QueryAbsent::NegativeCycle), QueryStats { collects, aborted: false });
            }
            old = new;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relax_strictness_and_saturation() {
        let u = VNode::new(1, 2);
        let v = VNode::new(2, 2);
        unsafe {
            *u.oi.dist.get_mut(0) = 0.0;
            *v.oi.dist.get_mut(0) = f64::INFINITY;
        }
        // Infinity relaxes down.
        assert!(relax(0, &u, &v, 5.0));
        assert_eq!(unsafe { *v.oi.dist.get(0) }, 5.0);
        // Equal candidate does not relax (strict greater-than).
        unsafe { *v.oi.dist.get_mut(0) = 3.0 };
        unsafe { *u.oi.dist.get_mut(0) = 1.0 };
        assert!(!relax(0, &u, &v, 2.0));
        // Infinite source never relaxes anything.
        unsafe { *u.oi.dist.get_mut(0) = f64::INFINITY };
        assert!(!relax(0, &u, &v, 1.0));
        assert_eq!(unsafe { *v.oi.dist.get(0) }, 3.0);
    }
}
