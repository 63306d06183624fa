//! The generic query framework: repeated partial-snapshot collection with
//! double-collect validation.
//!
//! A collect is a BFS over alive vertices reachable from the query source
//! through alive edges, producing a chain of [`SnapNode`]s in visit order.
//! Each snap node records the vertex identity, its BFS parent and the
//! vertex's edge-counter stamp at visit time. Two consecutive collects that
//! compare equal element-wise on (vertex identity, parent identity, counter
//! stamp) prove the collected region was stable across an instant, which is
//! where the query linearizes. The counter stamp is what catches an edge
//! removed and re-added between the two collects.

use std::collections::VecDeque;
use std::sync::Arc;

use crossbeam_epoch::Guard;

use crate::edge_tree;
use crate::graph::ThreadToken;
use crate::node::VNode;
use crate::types::ConsistencyMode;

/// One entry of a collected partial snapshot.
#[derive(Clone, Copy)]
pub struct SnapNode {
    /// Vertex identity. Only dereferenced under the collecting query's guard.
    pub vertex: *const VNode,
    /// Index of the BFS parent within the same chain.
    pub parent: Option<usize>,
    /// `ecnt` of the vertex at the moment of visit, read before enqueueing.
    pub ecnt_stamp: u64,
}

/// A collected chain; `nodes` order is the BFS visit order.
#[derive(Default)]
pub struct SnapChain {
    pub nodes: Vec<SnapNode>,
}

impl SnapChain {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn parent_vertex(&self, i: usize) -> Option<*const VNode> {
        self.nodes[i].parent.map(|p| self.nodes[p].vertex)
    }
}

/// True iff `tid`'s visit stamp on `v` equals the current collect stamp.
#[inline]
pub fn chk_visit(v: &VNode, tid: usize, cnt: u64) -> bool {
    unsafe { *v.oi.vis.get(tid) == cnt }
}

#[inline]
pub fn stamp_visit(v: &VNode, tid: usize, cnt: u64) {
    unsafe { *v.oi.vis.get_mut(tid) = cnt }
}

/// Element-wise chain comparison on vertex identity, parent identity and
/// counter stamp. The parents of the two chains are distinct snap nodes, so
/// they compare by the vertex they designate.
pub fn cmp_tree(old: &SnapChain, new: &SnapChain) -> bool {
    if old.nodes.len() != new.nodes.len() {
        return false;
    }
    for i in 0..old.nodes.len() {
        let (o, n) = (&old.nodes[i], &new.nodes[i]);
        if o.vertex != n.vertex
            || o.ecnt_stamp != n.ecnt_stamp
            || old.parent_vertex(i) != new.parent_vertex(i)
        {
            return false;
        }
    }
    true
}

/// BFS partial-snapshot collection rooted at `source`. Vertices are stamped
/// visited in the collector's slot, appended to the chain and enqueued; each
/// dequeued vertex has its out-edges scanned in key order, skipping marked
/// edges and dead destinations. A vertex marked after enqueueing keeps its
/// chain entry but its edges are not expanded.
pub fn tree_collect(source: &Arc<VNode>, token: &ThreadToken<'_>, guard: &Guard) -> SnapChain {
    let tid = token.tid();
    let cnt = token.next_collect_stamp();
    let mut chain = SnapChain::default();
    stamp_visit(source, tid, cnt);
    chain.nodes.push(SnapNode {
        vertex: Arc::as_ptr(source),
        parent: None,
        ecnt_stamp: source.ecnt(),
    });
    let mut queue: VecDeque<usize> = VecDeque::new();
    queue.push_back(0);
    while let Some(ci) = queue.pop_front() {
        let cvn = unsafe { &*chain.nodes[ci].vertex };
        if cvn.is_marked() {
            continue;
        }
        let chain = &mut chain;
        let queue = &mut queue;
        edge_tree::in_order_collect(&cvn.enxt, guard, |e| {
            let adjn: &Arc<VNode> = e.dest;
            if adjn.is_marked() {
                return;
            }
            if !chk_visit(adjn, tid, cnt) {
                stamp_visit(adjn, tid, cnt);
                let idx = chain.nodes.len();
                chain.nodes.push(SnapNode {
                    vertex: Arc::as_ptr(adjn),
                    parent: Some(ci),
                    ecnt_stamp: adjn.ecnt(),
                });
                queue.push_back(idx);
            }
        });
    }
    chain
}

/// Test and harness hook points for the scan loop.
#[derive(Default)]
pub struct ScanHooks<'a> {
    /// Called after collect `k` completes and before collect `k + 1` starts.
    /// Returning false abandons the scan (starvation guard).
    pub between_collects: Option<&'a mut dyn FnMut(u64) -> bool>,
}

impl ScanHooks<'_> {
    fn keep_going(&mut self, done: u64) -> bool {
        match self.between_collects.as_mut() {
            Some(f) => f(done),
            None => true,
        }
    }
}

/// Multi-scan driver: repeats `collect` until two consecutive results
/// satisfy `matches`, or returns the first collect in single-collect mode.
/// Returns the accepted result and the number of collects performed, or
/// `None` if a hook aborted the scan.
pub fn scan_with<T>(
    mode: ConsistencyMode,
    hooks: &mut ScanHooks<'_>,
    mut collect: impl FnMut() -> T,
    matches: impl Fn(&T, &T) -> bool,
) -> (Option<T>, u64) {
    let mut ot = collect();
    let mut done = 1u64;
    if mode == ConsistencyMode::SingleCollect {
        return (Some(ot), done);
    }
    loop {
        if !hooks.keep_going(done) {
            return (None, done);
        }
        let nt = collect();
        done += 1;
        if matches(&ot, &nt) {
            return (Some(nt), done);
        }
        ot = nt;
    }
}
