//! Betweenness centrality over validated snapshots.
//!
//! A collect is a BFS with path discovery and counting: first touch of a
//! vertex sets its hop distance, every shortest-level edge adds the nearer
//! vertex's path count into the farther one's and records the predecessor.
//! After a validated scan the one-sided dependencies are accumulated over
//! the chain in reverse visit order and folded into the per-thread
//! centrality slots. The full centrality of a vertex aggregates one such
//! pass from every alive source.

use std::collections::VecDeque;

use crossbeam_epoch as epoch;
use crossbeam_epoch::Guard;

use crate::edge_tree;
use crate::graph::{Graph, ThreadToken};
use crate::node::VNode;
use crate::snapshot::{self, ScanHooks, SnapChain, SnapNode};
use crate::types::{ConsistencyMode, QueryStats, VertexKey};

/// Dependency contributions of one single-source pass.
#[derive(Debug, Clone, Default)]
pub struct BcSourcePass {
    /// (vertex, dependency) pairs for every vertex in the collected chain,
    /// the source included with its (always zero-added) self term excluded.
    pub deltas: Vec<(VertexKey, f64)>,
    pub stats: QueryStats,
}

/// Aggregated centrality scores, one entry per alive vertex.
#[derive(Debug, Clone, Default)]
pub struct BcScores {
    pub scores: Vec<(VertexKey, f64)>,
    pub stats: QueryStats,
}

impl BcScores {
    pub fn get(&self, key: VertexKey) -> Option<f64> {
        self.scores.iter().find(|(k, _)| *k == key).map(|(_, s)| *s)
    }
}

/// Resets distance, path count and predecessor slots for this collect.
fn init_bc_slots(graph: &Graph, tid: usize, guard: &Guard) {
    for v in graph.table.collect_vertices(guard) {
        unsafe {
            *v.oi.dist.get_mut(tid) = f64::INFINITY;
            *v.oi.sigma.get_mut(tid) = 0.0;
            v.oi.preds.get_mut(tid).clear();
        }
    }
}

fn bc_tree_collect(
    graph: &Graph,
    source: &std::sync::Arc<VNode>,
    token: &ThreadToken<'_>,
    guard: &Guard,
) -> SnapChain {
    let tid = token.tid();
    init_bc_slots(graph, tid, guard);
    let cnt = token.next_collect_stamp();

    let mut chain = SnapChain::default();
    let mut queue: VecDeque<usize> = VecDeque::new();
    snapshot::stamp_visit(source, tid, cnt);
    unsafe {
        *source.oi.dist.get_mut(tid) = 0.0;
        *source.oi.sigma.get_mut(tid) = 1.0;
    }
    chain.nodes.push(SnapNode {
        vertex: std::sync::Arc::as_ptr(source),
        parent: None,
        ecnt_stamp: source.ecnt(),
    });
    queue.push_back(0);

    while let Some(ci) = queue.pop_front() {
        let cvn = unsafe { &*chain.nodes[ci].vertex };
        if cvn.is_marked() {
            continue;
        }
        let cur_dist = unsafe { *cvn.oi.dist.get(tid) };
        let cur_sigma = unsafe { *cvn.oi.sigma.get(tid) };
        let chain = &mut chain;
        let queue = &mut queue;
        edge_tree::in_order_collect(&cvn.enxt, guard, |e| {
            let adjn = e.dest;
            if adjn.is_marked() {
                return;
            }
            let adj_dist = unsafe { *adjn.oi.dist.get(tid) };
            if adj_dist.is_infinite() {
                unsafe { *adjn.oi.dist.get_mut(tid) = cur_dist + 1.0 };
                let idx = chain.nodes.len();
                chain.nodes.push(SnapNode {
                    vertex: std::sync::Arc::as_ptr(adjn),
                    parent: Some(ci),
                    ecnt_stamp: adjn.ecnt(),
                });
                queue.push_back(idx);
            }
            // Path counting on the shortest level: the farther vertex
            // absorbs the nearer one's count and records it as predecessor.
            if unsafe { *adjn.oi.dist.get(tid) } == cur_dist + 1.0 {
                unsafe {
                    *adjn.oi.sigma.get_mut(tid) += cur_sigma;
                    adjn.oi.preds.get_mut(tid).push(cvn as *const VNode);
                }
            }
        });
    }
    chain
}

/// Reverse-order dependency accumulation over a validated chain. Returns the
/// per-vertex dependencies and, when `accumulate` is set, folds them into
/// the per-thread centrality slots of every non-source vertex.
fn back_propagate(
    chain: &SnapChain,
    source: *const VNode,
    tid: usize,
    accumulate: bool,
) -> Vec<(VertexKey, f64)> {
    for sn in &chain.nodes {
        unsafe { *(*sn.vertex).oi.delta.get_mut(tid) = 0.0 };
    }
    let mut out = Vec::with_capacity(chain.nodes.len());
    for sn in chain.nodes.iter().rev() {
        let w = unsafe { &*sn.vertex };
        let sigma_w = unsafe { *w.oi.sigma.get(tid) };
        let delta_w = unsafe { *w.oi.delta.get(tid) };
        if sigma_w > 0.0 {
            for &p in unsafe { w.oi.preds.get(tid) } {
                let p = unsafe { &*p };
                let sigma_p = unsafe { *p.oi.sigma.get(tid) };
                unsafe {
                    *p.oi.delta.get_mut(tid) += (sigma_p / sigma_w) * (1.0 + delta_w);
                }
            }
        }
        if sn.vertex != source {
            if accumulate {
                unsafe { *w.oi.cb.get_mut(tid) += delta_w };
            }
            out.push((w.key, delta_w));
        }
    }
    out.reverse();
    out
}

impl Graph {
    /// One validated single-source dependency pass from `s`. `None` when `s`
    /// is missing or removed.
    pub fn bc_single_source(
        &self,
        t: &ThreadToken<'_>,
        s: VertexKey,
        mode: ConsistencyMode,
        hooks: &mut ScanHooks<'_>,
    ) -> Option<BcSourcePass> {
        let guard = epoch::pin();
        let source = match self.table.hash_contains(s, &guard) {
            Some(n) if !n.is_marked() => n.clone(),
            _ => return None,
        };
        let (chain, collects) = snapshot::scan_with(
            mode,
            hooks,
            || bc_tree_collect(self, &source, t, &guard),
            snapshot::cmp_tree,
        );
        let aborted = chain.is_none();
        let stats = QueryStats { collects, aborted };
        let chain = chain?;
        let deltas = back_propagate(&chain, std::sync::Arc::as_ptr(&source), t.tid(), false);
        Some(BcSourcePass { deltas, stats })
    }

    /// Betweenness centrality of `v`: aggregates a validated single-source
    /// pass from every alive source and reads the accumulated slot. `None`
    /// when `v` is missing or removed.
    pub fn bc(&self, t: &ThreadToken<'_>, v: VertexKey) -> Option<f64> {
        self.bc_with(t, v, ConsistencyMode::Linearizable, &mut ScanHooks::default())
            .map(|(score, _)| score)
    }

    pub fn bc_with(
        &self,
        t: &ThreadToken<'_>,
        v: VertexKey,
        mode: ConsistencyMode,
        hooks: &mut ScanHooks<'_>,
    ) -> Option<(f64, QueryStats)> {
        let scores = self.bc_all_with(t, mode, hooks)?;
        let score = scores.get(v)?;
        Some((score, scores.stats))
    }

    /// Centrality of every alive vertex (the all-sources aggregation).
    pub fn bc_all(&self, t: &ThreadToken<'_>) -> Option<BcScores> {
        self.bc_all_with(t, ConsistencyMode::Linearizable, &mut ScanHooks::default())
    }

    pub fn bc_all_with(
        &self,
        t: &ThreadToken<'_>,
        mode: ConsistencyMode,
        hooks: &mut ScanHooks<'_>,
    ) -> Option<BcScores> {
        let tid = t.tid();
        let mut total_collects = 0u64;
        let sources: Vec<VertexKey> = {
            let guard = epoch::pin();
            let vertices = self.table.collect_vertices(&guard);
            for v in &vertices {
                unsafe { *v.oi.cb.get_mut(tid) = 0.0 };
            }
            vertices.iter().map(|v| v.key).collect()
        };
        for s in &sources {
            let guard = epoch::pin();
            let source = match self.table.hash_contains(*s, &guard) {
                Some(n) if !n.is_marked() => n.clone(),
                _ => continue,
            };
            let (chain, collects) = snapshot::scan_with(
                mode,
                hooks,
                || bc_tree_collect(self, &source, t, &guard),
                snapshot::cmp_tree,
            );
            total_collects += collects;
            let chain = match chain {
                Some(c) => c,
                None => {
                    return Some(BcScores {
                        scores: Vec::new(),
                        stats: QueryStats {
                            collects: total_collects,
                            aborted: true,
                        },
                    })
                }
            };
            back_propagate(&chain, std::sync::Arc::as_ptr(&source), tid, true);
        }
        let guard = epoch::pin();
        let mut scores: Vec<(VertexKey, f64)> = self
            .table
            .collect_vertices(&guard)
            .iter()
            .map(|v| (v.key, unsafe { *v.oi.cb.get(tid) }))
            .collect();
        scores.sort_by_key(|(k, _)| *k);
        Some(BcScores {
            scores,
            stats: QueryStats {
                collects: total_collects,
                aborted: false,
            },
        })
    }
}
