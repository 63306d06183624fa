//! Resizable lock-free hash table of vertices built from freezable sets.
//!
//! Each bucket slot holds an immutable `FSetNode`: a sorted spine of strong
//! vertex references plus a mutable-flag. Mutations copy the spine and
//! install the new node with a single CAS on the slot; freezing installs a
//! copy with the flag cleared, after which the slot never changes again and
//! its members can be migrated to a resized table. At most two tables are
//! live at any time: the head and, during a resize, its predecessor.
//!
//! Vertex liveness for readers that arrive via edge destination pointers is
//! carried by the vertex's own mark bit, set by the remover right after the
//! bucket CAS that excluded the node.

use std::sync::atomic::{AtomicIsize, AtomicPtr, Ordering};
use std::sync::{Arc, Weak};

use crossbeam_epoch::{Atomic, Guard, Owned, Shared};

use crate::node::VNode;
use crate::types::VertexKey;

const SEQ: Ordering = Ordering::SeqCst;

/// Lock-free append-only list of every vertex ever created. At table drop
/// the surviving nodes' edge trees are torn down first, which breaks the
/// reference cycles that removed vertices can form through their edges.
struct Registry {
    head: AtomicPtr<RegNode>,
}

struct RegNode {
    vertex: Weak<VNode>,
    next: *mut RegNode,
}

impl Registry {
    fn new() -> Registry {
        Registry {
            head: AtomicPtr::new(std::ptr::null_mut()),
        }
    }

    fn push(&self, vertex: Weak<VNode>) {
        let node = Box::into_raw(Box::new(RegNode {
            vertex,
            next: std::ptr::null_mut(),
        }));
        loop {
            let head = self.head.load(SEQ);
            unsafe { (*node).next = head };
            if self
                .head
                .compare_exchange(head, node, SEQ, SEQ)
                .is_ok()
            {
                return;
            }
        }
    }
}

impl Drop for Registry {
    fn drop(&mut self) {
        let mut cur = self.head.swap(std::ptr::null_mut(), SEQ);
        while !cur.is_null() {
            let node = unsafe { Box::from_raw(cur) };
            if let Some(v) = node.vertex.upgrade() {
                let arcs = unsafe { crate::edge_tree::teardown_tree(&v.enxt) };
                crate::node::release_dest_arcs(arcs);
            }
            cur = node.next;
        }
    }
}

/// Freezable set of vertices. `members` is sorted by key and immutable;
/// once a node with `mutable: false` is installed the bucket is final.
pub struct FSetNode {
    pub members: Vec<Arc<VNode>>,
    pub mutable: bool,
}

impl FSetNode {
    fn empty() -> FSetNode {
        FSetNode {
            members: Vec::new(),
            mutable: true,
        }
    }

    fn position(&self, key: VertexKey) -> Result<usize, usize> {
        self.members.binary_search_by(|m| m.key.cmp(&key))
    }

    pub fn contains(&self, key: VertexKey) -> Option<&Arc<VNode>> {
        self.position(key).ok().map(|i| &self.members[i])
    }
}

/// One bucket-array generation of the hash table.
pub struct HNode {
    buckets: Box<[Atomic<FSetNode>]>,
    pub size: usize,
    pred: Atomic<HNode>,
}

impl HNode {
    fn with_empty_buckets(size: usize) -> HNode {
        HNode {
            buckets: (0..size).map(|_| Atomic::new(FSetNode::empty())).collect(),
            size,
            pred: Atomic::null(),
        }
    }

    fn with_null_buckets(size: usize, pred: Shared<'_, HNode>) -> HNode {
        HNode {
            buckets: (0..size).map(|_| Atomic::null()).collect(),
            size,
            pred: Atomic::from(pred),
        }
    }
}

impl Drop for HNode {
    fn drop(&mut self) {
        unsafe {
            let guard = crossbeam_epoch::unprotected();
            for b in self.buckets.iter() {
                let s = b.load(SEQ, guard);
                if !s.is_null() {
                    drop(s.into_owned());
                }
            }
        }
    }
}

#[inline]
fn bucket_index(key: VertexKey, size: usize) -> usize {
    (key as u64 as usize) % size
}

/// Operation kinds applied to a freezable set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FSetOpKind {
    Add,
    Remove,
}

/// A pending set operation; `done`/`resp` follow the freezable-set protocol.
pub struct FSetOp {
    pub kind: FSetOpKind,
    pub key: VertexKey,
    pub done: bool,
    pub resp: bool,
    /// For removes: the node that was excluded, so the caller can mark it.
    pub removed: Option<Arc<VNode>>,
    /// For adds: the node that was inserted.
    pub inserted: Option<Arc<VNode>>,
}

impl FSetOp {
    fn new(kind: FSetOpKind, key: VertexKey) -> FSetOp {
        FSetOp {
            kind,
            key,
            done: false,
            resp: false,
            removed: None,
            inserted: None,
        }
    }
}

/// Grow/shrink policy consulted after every add/remove.
pub trait ResizeHeuristic: Send + Sync {
    fn should_grow(&self, alive: usize, buckets: usize) -> bool;
    fn should_shrink(&self, alive: usize, buckets: usize) -> bool;
}

/// Classic load-factor bounds: grow past `grow_factor` keys per bucket,
/// shrink below `1/shrink_divisor` keys per bucket.
pub struct LoadFactorPolicy {
    pub grow_factor: usize,
    pub shrink_divisor: usize,
}

impl Default for LoadFactorPolicy {
    fn default() -> Self {
        LoadFactorPolicy {
            grow_factor: 4,
            shrink_divisor: 4,
        }
    }
}

impl ResizeHeuristic for LoadFactorPolicy {
    fn should_grow(&self, alive: usize, buckets: usize) -> bool {
        alive > self.grow_factor * buckets
    }
    fn should_shrink(&self, alive: usize, buckets: usize) -> bool {
        buckets > 1 && alive < buckets / self.shrink_divisor
    }
}

/// Grow once the key count exceeds the bucket count by `slack`.
pub struct AdditiveSlackPolicy {
    pub slack: usize,
}

impl ResizeHeuristic for AdditiveSlackPolicy {
    fn should_grow(&self, alive: usize, buckets: usize) -> bool {
        alive > buckets + self.slack
    }
    fn should_shrink(&self, _alive: usize, _buckets: usize) -> bool {
        false
    }
}

/// The vertex store.
pub struct BucketTable {
    head: Atomic<HNode>,
    alive: AtomicIsize,
    thread_capacity: usize,
    policy: Box<dyn ResizeHeuristic>,
    registry: Registry,
}

impl BucketTable {
    pub fn new(
        initial_buckets: usize,
        thread_capacity: usize,
        policy: Box<dyn ResizeHeuristic>,
    ) -> BucketTable {
        assert!(initial_buckets.is_power_of_two());
        BucketTable {
            head: Atomic::new(HNode::with_empty_buckets(initial_buckets)),
            alive: AtomicIsize::new(0),
            thread_capacity,
            policy,
            registry: Registry::new(),
        }
    }

    pub fn alive_count(&self) -> usize {
        self.alive.load(SEQ).max(0) as usize
    }

    pub fn head_size(&self, guard: &Guard) -> usize {
        unsafe { self.head.load(SEQ, guard).deref() }.size
    }

    /// Adds `key`; returns true iff it was absent at the linearization point.
    pub fn hash_add(&self, key: VertexKey, guard: &Guard) -> bool {
        let mut op = FSetOp::new(FSetOpKind::Add, key);
        self.apply(&mut op, guard);
        if op.resp {
            self.alive.fetch_add(1, SEQ);
            let t = unsafe { self.head.load(SEQ, guard).deref() };
            if self.policy.should_grow(self.alive_count(), t.size) {
                self.resize(true, guard);
            }
        }
        op.resp
    }

    /// Removes `key`; returns true iff it was present at the linearization
    /// point. The excluded node is marked before returning so readers holding
    /// edge destination pointers observe the removal.
    pub fn hash_remove(&self, key: VertexKey, guard: &Guard) -> bool {
        let mut op = FSetOp::new(FSetOpKind::Remove, key);
        self.apply(&mut op, guard);
        if op.resp {
            if let Some(node) = op.removed.as_ref() {
                node.mark_removed();
            }
            self.alive.fetch_sub(1, SEQ);
            let t = unsafe { self.head.load(SEQ, guard).deref() };
            if self.policy.should_shrink(self.alive_count(), t.size) {
                self.resize(false, guard);
            }
        }
        op.resp
    }

    /// Wait-free membership check returning the vertex reference. When the
    /// head bucket is still uninitialized the predecessor's bucket is read,
    /// with the double-check against a racing resize completion.
    pub fn hash_contains<'g>(&self, key: VertexKey, guard: &'g Guard) -> Option<&'g Arc<VNode>> {
        let t = unsafe { self.head.load(SEQ, guard).deref() };
        let mut b = t.buckets[bucket_index(key, t.size)].load(SEQ, guard);
        if b.is_null() {
            let s = t.pred.load(SEQ, guard);
            b = if !s.is_null() {
                let s = unsafe { s.deref() };
                s.buckets[bucket_index(key, s.size)].load(SEQ, guard)
            } else {
                // The resize that cleared pred initialized every bucket first.
                t.buckets[bucket_index(key, t.size)].load(SEQ, guard)
            };
        }
        debug_assert!(!b.is_null());
        unsafe { b.deref() }.contains(key)
    }

    fn apply(&self, op: &mut FSetOp, guard: &Guard) {
        loop {
            let head = self.head.load(SEQ, guard);
            let t = unsafe { head.deref() };
            let idx = bucket_index(op.key, t.size);
            let slot = &t.buckets[idx];
            if slot.load(SEQ, guard).is_null() {
                self.init_bucket(head, idx, guard);
            }
            if self.invoke(slot, op, guard) {
                debug_assert!(op.done);
                return;
            }
        }
    }

    /// Tries to apply `op` to the bucket by installing a modified copy of the
    /// set. Fails (returns false) when the set has been frozen.
    fn invoke(&self, slot: &Atomic<FSetNode>, op: &mut FSetOp, guard: &Guard) -> bool {
        let mut cur = slot.load(SEQ, guard);
        loop {
            let set = unsafe { cur.deref() };
            if !set.mutable {
                return false;
            }
            let pos = set.position(op.key);
            let (resp, members, removed) = match (op.kind, pos) {
                (FSetOpKind::Add, Ok(_)) => (false, None, None),
                (FSetOpKind::Add, Err(at)) => {
                    let node = op
                        .inserted
                        .get_or_insert_with(|| {
                            let v = VNode::new(op.key, self.thread_capacity);
                            self.registry.push(Arc::downgrade(&v));
                            v
                        })
                        .clone();
                    let mut m = set.members.clone();
                    m.insert(at, node);
                    (true, Some(m), None)
                }
                (FSetOpKind::Remove, Ok(at)) => {
                    let node = set.members[at].clone();
                    let mut m = set.members.clone();
                    m.remove(at);
                    (true, Some(m), Some(node))
                }
                (FSetOpKind::Remove, Err(_)) => (false, None, None),
            };
            match members {
                None => {
                    // No mutation needed; the read of the immutable set is
                    // the linearization point.
                    op.resp = resp;
                    op.done = true;
                    return true;
                }
                Some(m) => {
                    let fresh = Owned::new(FSetNode {
                        members: m,
                        mutable: true,
                    });
                    match slot.compare_exchange(cur, fresh, SEQ, SEQ, guard) {
                        Ok(_) => {
                            unsafe { guard.defer_destroy(cur) };
                            op.resp = resp;
                            op.removed = removed;
                            op.done = true;
                            return true;
                        }
                        Err(e) => {
                            drop(e.new);
                            cur = e.current;
                        }
                    }
                }
            }
        }
    }

    /// Freezes the bucket and returns its final member set.
    fn freeze<'g>(&self, slot: &Atomic<FSetNode>, guard: &'g Guard) -> &'g FSetNode {
        let mut cur = slot.load(SEQ, guard);
        loop {
            let set = unsafe { cur.deref() };
            if !set.mutable {
                return set;
            }
            let frozen = Owned::new(FSetNode {
                members: set.members.clone(),
                mutable: false,
            });
            match slot.compare_exchange(cur, frozen, SEQ, SEQ, guard) {
                Ok(installed) => {
                    unsafe { guard.defer_destroy(cur) };
                    return unsafe { installed.deref() };
                }
                Err(e) => {
                    drop(e.new);
                    cur = e.current;
                }
            }
        }
    }

    /// Initializes bucket `idx` of table `t` by splitting or merging the
    /// frozen buckets of its predecessor. Exactly one initializer wins the
    /// installing CAS.
    fn init_bucket<'g>(
        &self,
        head: Shared<'g, HNode>,
        idx: usize,
        guard: &'g Guard,
    ) -> Shared<'g, FSetNode> {
        let t = unsafe { head.deref() };
        let b = t.buckets[idx].load(SEQ, guard);
        if !b.is_null() {
            return b;
        }
        let s = t.pred.load(SEQ, guard);
        let members: Vec<Arc<VNode>> = if s.is_null() {
            Vec::new()
        } else {
            let s = unsafe { s.deref() };
            if t.size == 2 * s.size {
                // Grow: this bucket takes the matching residue class.
                let src = self.freeze(&s.buckets[idx % s.size], guard);
                src.members
                    .iter()
                    .filter(|m| bucket_index(m.key, t.size) == idx)
                    .cloned()
                    .collect()
            } else {
                debug_assert_eq!(t.size * 2, s.size);
                // Shrink: merge the two buckets that map here.
                let a = self.freeze(&s.buckets[idx], guard);
                let b2 = self.freeze(&s.buckets[idx + t.size], guard);
                let mut m: Vec<Arc<VNode>> =
                    a.members.iter().chain(b2.members.iter()).cloned().collect();
                m.sort_by_key(|n| n.key);
                m
            }
        };
        let fresh = Owned::new(FSetNode {
            members,
            mutable: true,
        });
        match t.buckets[idx].compare_exchange(Shared::null(), fresh, SEQ, SEQ, guard) {
            Ok(installed) => installed,
            Err(e) => {
                drop(e.new);
                e.current
            }
        }
    }

    /// Installs a new head with doubled or halved size. Every bucket of the
    /// current head is initialized first, so the old generation can be
    /// detached. A losing head CAS means another resize won; no retry.
    pub fn resize(&self, grow: bool, guard: &Guard) {
        let head = self.head.load(SEQ, guard);
        self.resize_from(head, grow, guard);
    }

    /// Resize continuation after the head read, split out so races between
    /// two resizers that observed the same head can be driven determinately.
    fn resize_from(&self, head: Shared<'_, HNode>, grow: bool, guard: &Guard) {
        let t = unsafe { head.deref() };
        if t.size > 1 || grow {
            for i in 0..t.size {
                self.init_bucket(head, i, guard);
            }
            let old_pred = t.pred.swap(Shared::null(), SEQ, guard);
            if !old_pred.is_null() {
                unsafe { guard.defer_destroy(old_pred) };
            }
            let new_size = if grow { t.size * 2 } else { t.size / 2 };
            let fresh = Owned::new(HNode::with_null_buckets(new_size, head));
            if let Err(e) = self.head.compare_exchange(head, fresh, SEQ, SEQ, guard) {
                drop(e.new);
            }
        }
    }

    /// Snapshot of all alive vertices, deduplicated by key. Exact under
    /// quiescence; a best-effort enumeration under concurrency.
    pub fn collect_vertices(&self, guard: &Guard) -> Vec<Arc<VNode>> {
        let t = unsafe { self.head.load(SEQ, guard).deref() };
        let mut out: Vec<Arc<VNode>> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        let mut take = |set: &FSetNode| {
            for m in set.members.iter() {
                if !m.is_marked() && seen.insert(m.key) {
                    out.push(m.clone());
                }
            }
        };
        let mut any_uninit = false;
        for idx in 0..t.size {
            let b = t.buckets[idx].load(SEQ, guard);
            match unsafe { b.as_ref() } {
                Some(set) => take(set),
                None => any_uninit = true,
            }
        }
        if any_uninit {
            // Members not yet migrated live in the predecessor generation;
            // the key dedup above absorbs the overlap.
            let s = t.pred.load(SEQ, guard);
            if let Some(s) = unsafe { s.as_ref() } {
                for idx in 0..s.size {
                    let b = s.buckets[idx].load(SEQ, guard);
                    if let Some(set) = unsafe { b.as_ref() } {
                        take(set);
                    }
                }
            } else {
                // Resize completed meanwhile; every head bucket is filled now.
                for idx in 0..t.size {
                    let b = t.buckets[idx].load(SEQ, guard);
                    if let Some(set) = unsafe { b.as_ref() } {
                        take(set);
                    }
                }
            }
        }
        out
    }

    /// Walks every bucket of the head table applying `f` to alive members.
    pub fn for_each_alive(&self, guard: &Guard, mut f: impl FnMut(&Arc<VNode>)) {
        for v in self.collect_vertices(guard) {
            f(&v);
        }
    }

    /// Structural invariant checks used by tests and the harness: sorted
    /// spines, no duplicates, no marked members.
    pub fn check_bucket_invariants(&self, guard: &Guard) -> Result<(), String> {
        let t = unsafe { self.head.load(SEQ, guard).deref() };
        for idx in 0..t.size {
            let b = t.buckets[idx].load(SEQ, guard);
            if b.is_null() {
                continue;
            }
            let set = unsafe { b.deref() };
            for w in set.members.windows(2) {
                if w[0].key >= w[1].key {
                    return Err(format!("bucket {idx} spine not strictly sorted"));
                }
            }
            for m in set.members.iter() {
                if bucket_index(m.key, t.size) != idx {
                    return Err(format!("key {} hashed to wrong bucket {idx}", m.key));
                }
                if m.is_marked() {
                    return Err(format!("bucket {idx} holds marked key {}", m.key));
                }
            }
        }
        Ok(())
    }
}

impl Drop for BucketTable {
    fn drop(&mut self) {
        // Break edge reference cycles first, then free the table. Flush the
        // collector so deferred garbage from this graph drains promptly.
        self.registry = Registry::new();
        unsafe {
            let guard = crossbeam_epoch::unprotected();
            let head = self.head.load(SEQ, guard);
            if head.is_null() {
                return;
            }
            let pred = head.deref().pred.load(SEQ, guard);
            if !pred.is_null() {
                drop(pred.into_owned());
                head.deref().pred.store(Shared::<HNode>::null(), SEQ);
            }
            drop(head.into_owned());
        }
    }
}
