//! Vertex nodes and their per-thread query scratch state.
//!
//! A `VNode` owns the root of its outgoing-edge tree and an `OpItem` holding
//! the edge-operation counter plus one scratch slot per registered thread for
//! each query algorithm. Slot `t` of any array is written only by the thread
//! registered as `t`; this single-writer rule is what makes the plain
//! (non-atomic) cells sound.

use std::cell::UnsafeCell;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Arc;

use crossbeam_epoch::Atomic;

use crate::edge_tree::ENode;
use crate::types::VertexKey;

/// Removal mark stored in the low bit of `vnxt`.
const VNXT_MARK: usize = 1;

/// Fixed-capacity array of per-thread scratch slots.
///
/// Slot `t` is read and written only by the thread holding token `t`, so no
/// atomicity is needed. The unsafe `Sync`/`Send` impls encode exactly that
/// contract.
pub struct PerThread<T> {
    slots: Box<[UnsafeCell<T>]>,
}

unsafe impl<T> Sync for PerThread<T> {}
unsafe impl<T> Send for PerThread<T> {}

impl<T: Default> PerThread<T> {
    pub fn new(capacity: usize) -> Self {
        let slots = (0..capacity)
            .map(|_| UnsafeCell::new(T::default()))
            .collect::<Vec<_>>()
            .into_boxed_slice();
        PerThread { slots }
    }
}

impl<T> PerThread<T> {
    #[inline]
    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    /// Read slot `tid`.
    ///
    /// # Safety
    /// The caller must hold the thread token for `tid`, or all writers must
    /// have quiesced.
    #[inline]
    pub unsafe fn get(&self, tid: usize) -> &T {
        &*self.slots[tid].get()
    }

    /// Mutate slot `tid`.
    ///
    /// # Safety
    /// The caller must hold the thread token for `tid`; slot `tid` is only
    /// ever touched by that one thread.
    #[allow(clippy::mut_from_ref)]
    #[inline]
    pub unsafe fn get_mut(&self, tid: usize) -> &mut T {
        &mut *self.slots[tid].get()
    }
}

/// Predecessor entry recorded during a betweenness-centrality collect.
/// Raw pointers are only dereferenced under the collecting query's guard.
pub type PredList = Vec<*const VNode>;

/// Per-vertex query anchor: the edge-operation counter plus per-thread
/// visit stamps, distances, path counts, dependencies, predecessor lists and
/// centrality accumulators.
pub struct OpItem {
    /// Bumped by one atomic increment per successful edge add, weight update
    /// or remove at this vertex. Never decreases.
    pub ecnt: AtomicU64,
    pub vis: PerThread<u64>,
    pub dist: PerThread<f64>,
    pub sigma: PerThread<f64>,
    pub delta: PerThread<f64>,
    pub preds: PerThread<PredList>,
    pub cb: PerThread<f64>,
}

impl OpItem {
    pub fn new(capacity: usize) -> Self {
        OpItem {
            ecnt: AtomicU64::new(0),
            vis: PerThread::new(capacity),
            dist: PerThread::new(capacity),
            sigma: PerThread::new(capacity),
            delta: PerThread::new(capacity),
            preds: PerThread::new(capacity),
            cb: PerThread::new(capacity),
        }
    }
}

/// A vertex of the graph.
///
/// Liveness is carried by the mark bit of `vnxt`: a marked vertex is
/// logically removed, and every reader reaching a `VNode` through an edge's
/// destination pointer re-checks this bit. The bucket membership itself lives
/// in the vertex store's freezable sets.
pub struct VNode {
    pub key: VertexKey,
    /// Low bit: removal mark. Set once, never cleared.
    vnxt: AtomicUsize,
    /// Root sentinel of the outgoing-edge tree; null until the first insert.
    pub enxt: Atomic<ENode>,
    pub oi: OpItem,
}

impl VNode {
    pub fn new(key: VertexKey, thread_capacity: usize) -> Arc<VNode> {
        Arc::new(VNode {
            key,
            vnxt: AtomicUsize::new(0),
            enxt: Atomic::null(),
            oi: OpItem::new(thread_capacity),
        })
    }

    /// True when the vertex is logically removed.
    #[inline]
    pub fn is_marked(&self) -> bool {
        self.vnxt.load(Ordering::SeqCst) & VNXT_MARK != 0
    }

    /// Logical removal. Called exactly once, by the remover that won the
    /// bucket CAS excluding this node.
    #[inline]
    pub fn mark_removed(&self) {
        self.vnxt.fetch_or(VNXT_MARK, Ordering::SeqCst);
    }

    #[inline]
    pub fn ecnt(&self) -> u64 {
        self.oi.ecnt.load(Ordering::SeqCst)
    }
}

impl Drop for VNode {
    fn drop(&mut self) {
        // Tear down the owned edge tree. Destination Arcs discovered in edge
        // payloads are routed through a thread-local queue so chains of dead
        // vertices unwind iteratively instead of recursing through Arc drops.
        let arcs = unsafe { crate::edge_tree::teardown_tree(&self.enxt) };
        release_dest_arcs(arcs);
    }
}

std::thread_local! {
    static TEARDOWN: std::cell::RefCell<(bool, Vec<Arc<VNode>>)> =
        const { std::cell::RefCell::new((false, Vec::new())) };
}

pub(crate) fn release_dest_arcs(arcs: Vec<Arc<VNode>>) {
    if arcs.is_empty() {
        return;
    }
    let mut pending = Some(arcs);
    // The thread-local may already be destroyed when epoch reclamation runs
    // from a thread-exit destructor; in that case unwind inline (depth is
    // bounded by the dead-vertex chain being freed).
    let claimed = TEARDOWN.try_with(|q| {
        let mut q = q.borrow_mut();
        q.1.extend(pending.take().unwrap());
        if q.0 {
            false
        } else {
            q.0 = true;
            true
        }
    });
    match claimed {
        Err(_) => drop(pending),
        Ok(false) => {
            // An outer frame is already draining; it will pick these up.
        }
        Ok(true) => {
            loop {
                let next = TEARDOWN.try_with(|q| q.borrow_mut().1.pop());
                match next {
                    Ok(Some(arc)) => drop(arc),
                    _ => break,
                }
            }
            let _ = TEARDOWN.try_with(|q| q.borrow_mut().0 = false);
        }
    }
}
