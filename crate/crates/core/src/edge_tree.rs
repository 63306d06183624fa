//! Per-vertex lock-free internal BST of outgoing edges.
//!
//! Every tree node carries a single atomic *state word*: a pointer whose two
//! low-order bits encode the operation flag (00 = NONE, 01 = MARKED,
//! 10 = CHILDCAS, 11 = RELOCATE). Under NONE/MARKED the pointer is the node's
//! edge payload (key, weight, destination); under CHILDCAS/RELOCATE it is an
//! operation descriptor that embeds the payload it was installed over. Flag
//! installation therefore captures the node content atomically, which is what
//! keeps concurrent weight updates and relocations from tearing each other:
//! a weight update CASes (payload, NONE) -> (payload', NONE) and fails if any
//! flag or other update intervened.
//!
//! Child pointers steal one low bit as a null flag; a "null" child retains
//! the address of the node it replaced so child CASes cannot suffer ABA.
//!
//! Removal of a node with two children publishes a relocation descriptor on
//! the successor (next largest key), then on the target; the successful state
//! transition moves the successor's payload pointer into the target in one
//! step, so key and weight always travel together.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use crossbeam_epoch::{Atomic, Guard, Owned, Shared};

use crate::node::VNode;
use crate::types::{PutEdgeOutcome, VertexKey, KEY_MIN_SENTINEL};

const SEQ: Ordering = Ordering::SeqCst;

// State-word flags, stored in the two low-order bits of the pointer.
pub const FLAG_NONE: usize = 0b00;
pub const FLAG_MARKED: usize = 0b01;
pub const FLAG_CHILDCAS: usize = 0b10;
pub const FLAG_RELOCATE: usize = 0b11;

// Null flag for child pointers.
const CHILD_NULL: usize = 0b1;

// Relocation states.
const RELOC_ONGOING: usize = 0;
const RELOC_SUCCESSFUL: usize = 1;
const RELOC_FAILED: usize = 2;

/// Edge content: destination key, weight and a strong reference to the
/// destination vertex. Immutable once published; weight updates publish a
/// fresh payload.
pub struct EdgePayload {
    pub key: VertexKey,
    pub weight: f64,
    /// `None` only for the per-tree root sentinel.
    pub dest: Option<Arc<VNode>>,
}

/// Descriptor for a pending child-pointer swing on `dest`.
pub struct ChildCasOp {
    is_left: bool,
    expected: Atomic<ENode>,
    update: Atomic<ENode>,
    /// Content of the flagged node, captured by the flag CAS.
    payload: Atomic<EdgeState>,
    /// When true the expected child is an excised node to retire on success.
    retire_expected: bool,
}

/// Descriptor for relocating the successor's content into `dest` when a
/// two-child node is removed.
pub struct RelocateOp {
    state: AtomicUsize,
    dest: Atomic<ENode>,
    /// Successor node the descriptor was installed on.
    succ: Atomic<ENode>,
    /// State word of `dest` at creation; phase one CASes it to the flag.
    dest_word: Atomic<EdgeState>,
    /// Successor payload captured atomically by the install CAS.
    replace: Atomic<EdgeState>,
    pub remove_key: VertexKey,
    pub replace_key: VertexKey,
}

/// Pointee of a state word.
#[repr(align(8))]
pub enum EdgeState {
    Payload(EdgePayload),
    ChildCas(ChildCasOp),
    Relocate(RelocateOp),
}

// Two flag bits require at least 4-byte alignment.
const _: () = assert!(std::mem::align_of::<EdgeState>() >= 4);
const _: () = assert!(std::mem::align_of::<ENode>() >= 4);

/// A node of the edge BST.
pub struct ENode {
    state: Atomic<EdgeState>,
    left: Atomic<ENode>,
    right: Atomic<ENode>,
}

impl ENode {
    fn new_with(payload: EdgePayload) -> Owned<ENode> {
        Owned::new(ENode {
            state: Atomic::new(EdgeState::Payload(payload)),
            left: Atomic::null(),
            right: Atomic::null(),
        })
    }

    fn sentinel() -> Owned<ENode> {
        ENode::new_with(EdgePayload {
            key: KEY_MIN_SENTINEL,
            weight: 0.0,
            dest: None,
        })
    }
}

impl Drop for ENode {
    fn drop(&mut self) {
        // Free the state-word chain this node owns. Children are not
        // followed: an excised node's children are still live tree nodes.
        let mut arcs = Vec::new();
        unsafe {
            let guard = crossbeam_epoch::unprotected();
            let word = self.state.load(SEQ, guard);
            free_state_word(word, &mut arcs, guard);
        }
        crate::node::release_dest_arcs(arcs);
    }
}

/// Frees the EdgeState a node's word points at, including the content
/// payload a descriptor owns. Only called when the node is solely owned
/// (epoch reclamation of an excised node, or tree teardown).
unsafe fn free_state_word(
    word: Shared<'_, EdgeState>,
    arcs: &mut Vec<Arc<VNode>>,
    _guard: &Guard,
) {
    if word.is_null() {
        return;
    }
    let obj = word.with_tag(0);
    match obj.deref() {
        EdgeState::Payload(_) => free_payload_obj(obj, arcs),
        EdgeState::ChildCas(c) => {
            let p = c.payload.load(SEQ, crossbeam_epoch::unprotected());
            free_payload_obj(p, arcs);
            drop(obj.into_owned());
        }
        EdgeState::Relocate(r) => {
            let p = r.replace.load(SEQ, crossbeam_epoch::unprotected());
            free_payload_obj(p, arcs);
            drop(obj.into_owned());
        }
    }
}

unsafe fn free_payload_obj(obj: Shared<'_, EdgeState>, arcs: &mut Vec<Arc<VNode>>) {
    if obj.is_null() {
        return;
    }
    let owned = obj.with_tag(0).into_owned();
    if let EdgeState::Payload(p) = *owned.into_box() {
        if let Some(a) = p.dest {
            arcs.push(a);
        }
    }
}

#[inline]
fn is_null_child(s: Shared<'_, ENode>) -> bool {
    s.tag() & CHILD_NULL != 0 || s.is_null()
}

/// Resolves the logical content of `node` given a state word read from it.
/// Always lands on a `Payload` variant.
unsafe fn content<'g>(
    node: Shared<'g, ENode>,
    word: Shared<'g, EdgeState>,
    guard: &'g Guard,
) -> Shared<'g, EdgeState> {
    let obj = word.with_tag(0);
    match obj.deref() {
        EdgeState::Payload(_) => obj,
        EdgeState::ChildCas(c) => c.payload.load(SEQ, guard),
        EdgeState::Relocate(r) => {
            let dest = r.dest.load(SEQ, guard);
            if node == dest && r.state.load(SEQ) != RELOC_SUCCESSFUL {
                let dw = r.dest_word.load(SEQ, guard);
                content(node, dw, guard)
            } else {
                r.replace.load(SEQ, guard)
            }
        }
    }
}

#[inline]
unsafe fn payload_ref<'g>(
    node: Shared<'g, ENode>,
    word: Shared<'g, EdgeState>,
    guard: &'g Guard,
) -> &'g EdgePayload {
    match content(node, word, guard).deref() {
        EdgeState::Payload(p) => p,
        _ => unreachable!("content() must resolve to a payload"),
    }
}

/// True when the edge delegated by `node` is logically present.
unsafe fn is_alive(node: Shared<'_, ENode>, word: Shared<'_, EdgeState>, guard: &Guard) -> bool {
    if word.tag() == FLAG_MARKED {
        return false;
    }
    if let EdgeState::Relocate(r) = word.with_tag(0).deref() {
        if node != r.dest.load(SEQ, guard) {
            // Successor of a relocation dies at the successful transition.
            return r.state.load(SEQ) != RELOC_SUCCESSFUL;
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FindStatus {
    Found,
    NotFoundL,
    NotFoundR,
    Abort,
}

pub struct FindResult<'g> {
    pub status: FindStatus,
    pub pred: Shared<'g, ENode>,
    pub pred_word: Shared<'g, EdgeState>,
    pub curr: Shared<'g, ENode>,
    pub curr_word: Shared<'g, EdgeState>,
}

/// Locates `key` in the subtree rooted at `root`, helping any flagged
/// descriptor it meets before retrying. `at_tree_root` selects the retry
/// behaviour when the root itself is flagged: help at the real root, abort
/// inside a sub-root search (the relocation path re-validates and restarts).
pub fn find<'g>(
    key: VertexKey,
    root: Shared<'g, ENode>,
    at_tree_root: bool,
    guard: &'g Guard,
) -> FindResult<'g> {
    'retry: loop {
        let mut result = FindStatus::NotFoundR;
        let mut curr = root;
        let mut curr_word = unsafe { curr.deref().state.load(SEQ, guard) };
        if curr_word.tag() != FLAG_NONE {
            if at_tree_root {
                // The sentinel only ever carries a CHILDCAS flag.
                help_child_cas(curr_word, curr, guard);
                continue 'retry;
            }
            return FindResult {
                status: FindStatus::Abort,
                pred: root,
                pred_word: curr_word,
                curr,
                curr_word,
            };
        }
        let mut pred = curr;
        let mut pred_word = curr_word;
        let mut next = unsafe { curr.deref().right.load(SEQ, guard) };
        let mut last_right = curr;
        let mut last_right_word = curr_word;

        while !is_null_child(next) {
            pred = curr;
            pred_word = curr_word;
            curr = next.with_tag(0);
            curr_word = unsafe { curr.deref().state.load(SEQ, guard) };
            if curr_word.tag() != FLAG_NONE {
                help(pred, pred_word, curr, curr_word, guard);
                continue 'retry;
            }
            let curr_key = unsafe { payload_ref(curr, curr_word, guard) }.key;
            if key < curr_key {
                result = FindStatus::NotFoundL;
                next = unsafe { curr.deref().left.load(SEQ, guard) };
            } else if key > curr_key {
                result = FindStatus::NotFoundR;
                next = unsafe { curr.deref().right.load(SEQ, guard) };
                last_right = curr;
                last_right_word = curr_word;
            } else {
                result = FindStatus::Found;
                break;
            }
        }

        if result != FindStatus::Found
            && last_right_word != unsafe { last_right.deref().state.load(SEQ, guard) }
        {
            continue 'retry;
        }
        if unsafe { curr.deref().state.load(SEQ, guard) } != curr_word {
            continue 'retry;
        }
        return FindResult {
            status: result,
            pred,
            pred_word,
            curr,
            curr_word,
        };
    }
}

/// Dispatches on the flag of `curr_word` to finish the pending operation.
pub fn help(
    pred: Shared<'_, ENode>,
    pred_word: Shared<'_, EdgeState>,
    curr: Shared<'_, ENode>,
    curr_word: Shared<'_, EdgeState>,
    guard: &Guard,
) {
    match curr_word.tag() {
        FLAG_CHILDCAS => help_child_cas(curr_word, curr, guard),
        FLAG_RELOCATE => {
            help_relocate(curr_word, pred, pred_word, curr, guard);
        }
        FLAG_MARKED => help_marked(pred, pred_word, curr, guard),
        _ => {}
    }
}

fn help_child_cas(word: Shared<'_, EdgeState>, dest: Shared<'_, ENode>, guard: &Guard) {
    let op = match unsafe { word.with_tag(0).deref() } {
        EdgeState::ChildCas(c) => c,
        _ => unreachable!("CHILDCAS flag must point at a ChildCasOp"),
    };
    let dest_ref = unsafe { dest.deref() };
    let addr = if op.is_left {
        &dest_ref.left
    } else {
        &dest_ref.right
    };
    let expected = op.expected.load(SEQ, guard);
    let update = op.update.load(SEQ, guard);
    if addr
        .compare_exchange(expected, update, SEQ, SEQ, guard)
        .is_ok()
        && op.retire_expected
    {
        // The swing physically disconnected the excised node.
        unsafe { guard.defer_destroy(expected.with_tag(0)) };
    }
    let _ = dest_ref.state.compare_exchange(
        word.with_tag(FLAG_CHILDCAS),
        word.with_tag(FLAG_NONE),
        SEQ,
        SEQ,
        guard,
    );
}

/// Completes the successor-side cleanup of a finished relocation so the
/// descriptor is unreachable from the successor before it can be retired.
fn finish_relocate(word: Shared<'_, EdgeState>, guard: &Guard) {
    let op = match unsafe { word.with_tag(0).deref() } {
        EdgeState::Relocate(r) => r,
        _ => return,
    };
    if op.state.load(SEQ) != RELOC_SUCCESSFUL {
        return;
    }
    let succ = op.succ.load(SEQ, guard);
    if succ.is_null() {
        return;
    }
    cleanup_successor(word, succ, true, guard);
}

/// Installs the post-relocation word on the successor: a marked clone of the
/// moved payload on success, or the original payload flag-cleared on failure.
fn cleanup_successor(
    word: Shared<'_, EdgeState>,
    succ: Shared<'_, ENode>,
    success: bool,
    guard: &Guard,
) {
    let op = match unsafe { word.with_tag(0).deref() } {
        EdgeState::Relocate(r) => r,
        _ => unreachable!(),
    };
    let succ_ref = unsafe { succ.deref() };
    if success {
        let replace = op.replace.load(SEQ, guard);
        let src = match unsafe { replace.deref() } {
            EdgeState::Payload(p) => p,
            _ => unreachable!("replace must be a payload"),
        };
        let clone = Owned::new(EdgeState::Payload(EdgePayload {
            key: src.key,
            weight: src.weight,
            dest: src.dest.clone(),
        }));
        if let Err(e) = succ_ref.state.compare_exchange(
            word.with_tag(FLAG_RELOCATE),
            clone.with_tag(FLAG_MARKED),
            SEQ,
            SEQ,
            guard,
        ) {
            drop(e.new);
        }
    } else {
        let _ = succ_ref.state.compare_exchange(
            word.with_tag(FLAG_RELOCATE),
            word.with_tag(FLAG_NONE),
            SEQ,
            SEQ,
            guard,
        );
    }
}

fn help_relocate(
    word: Shared<'_, EdgeState>,
    pred: Shared<'_, ENode>,
    pred_word: Shared<'_, EdgeState>,
    curr: Shared<'_, ENode>,
    guard: &Guard,
) -> bool {
    let op = match unsafe { word.with_tag(0).deref() } {
        EdgeState::Relocate(r) => r,
        _ => unreachable!("RELOCATE flag must point at a RelocateOp"),
    };
    let dest = op.dest.load(SEQ, guard);
    let dest_ref = unsafe { dest.deref() };
    let mut seen_state = op.state.load(SEQ);

    if seen_state == RELOC_ONGOING {
        let expected = op.dest_word.load(SEQ, guard);
        let flagged = word.with_tag(FLAG_RELOCATE);
        match dest_ref
            .state
            .compare_exchange(expected, flagged, SEQ, SEQ, guard)
        {
            Ok(_) => {
                // We unlinked whatever descriptor the old word pointed at.
                retire_displaced_word(dest, expected, guard);
                if op
                    .state
                    .compare_exchange(RELOC_ONGOING, RELOC_SUCCESSFUL, SEQ, SEQ)
                    .is_ok()
                {
                    retire_old_dest_content(dest, expected, guard);
                }
                seen_state = RELOC_SUCCESSFUL;
            }
            Err(e) => {
                if e.current == flagged {
                    // Another helper installed the flag.
                    if op
                        .state
                        .compare_exchange(RELOC_ONGOING, RELOC_SUCCESSFUL, SEQ, SEQ)
                        .is_ok()
                    {
                        retire_old_dest_content(dest, expected, guard);
                    }
                    seen_state = RELOC_SUCCESSFUL;
                } else {
                    seen_state = match op.state.compare_exchange(
                        RELOC_ONGOING,
                        RELOC_FAILED,
                        SEQ,
                        SEQ,
                    ) {
                        Ok(_) => RELOC_FAILED,
                        Err(s) => s,
                    };
                }
            }
        }
    }

    if seen_state == RELOC_SUCCESSFUL {
        // Clears the flag; content now resolves through the descriptor to
        // the moved payload, which subsumes the separate key and weight
        // swaps of the two-child removal.
        let _ = dest_ref.state.compare_exchange(
            word.with_tag(FLAG_RELOCATE),
            word.with_tag(FLAG_NONE),
            SEQ,
            SEQ,
            guard,
        );
    }

    let result = seen_state == RELOC_SUCCESSFUL;
    if dest == curr {
        return result;
    }
    cleanup_successor(word, curr, result, guard);
    if result {
        let pred_word = if dest == pred {
            word.with_tag(FLAG_NONE)
        } else {
            pred_word
        };
        help_marked(pred, pred_word, curr, guard);
    }
    result
}

/// Retires a descriptor that a flag CAS just displaced from a node's state
/// word. Payload objects are never retired here: content ownership moves
/// into the new descriptor.
fn retire_displaced_word(node: Shared<'_, ENode>, old: Shared<'_, EdgeState>, guard: &Guard) {
    let obj = old.with_tag(0);
    match unsafe { obj.deref() } {
        EdgeState::Payload(_) => {}
        EdgeState::ChildCas(_) => unsafe { guard.defer_destroy(obj) },
        EdgeState::Relocate(_) => {
            let _ = node;
            finish_relocate(obj, guard);
            unsafe { guard.defer_destroy(obj) };
        }
    }
}

/// Retires the pre-relocation content payload of `dest`. Called exactly once,
/// by the winner of the ONGOING -> SUCCESSFUL transition.
fn retire_old_dest_content(dest: Shared<'_, ENode>, dest_word: Shared<'_, EdgeState>, guard: &Guard) {
    let payload = unsafe { content(dest, dest_word, guard) };
    unsafe { guard.defer_destroy(payload.with_tag(0)) };
}

fn help_marked(
    pred: Shared<'_, ENode>,
    pred_word: Shared<'_, EdgeState>,
    curr: Shared<'_, ENode>,
    guard: &Guard,
) {
    let curr_ref = unsafe { curr.deref() };
    let left = curr_ref.left.load(SEQ, guard);
    let right = curr_ref.right.load(SEQ, guard);
    let new_ref = if is_null_child(left) {
        if is_null_child(right) {
            // Keep the excised node's address under the null flag (ABA).
            curr.with_tag(CHILD_NULL)
        } else {
            right
        }
    } else {
        left
    };

    let pred_ref = unsafe { pred.deref() };
    let is_left = pred_ref.left.load(SEQ, guard) == curr;
    let pred_content = unsafe { content(pred, pred_word, guard) };
    let cas_op = Owned::new(EdgeState::ChildCas(ChildCasOp {
        is_left,
        expected: Atomic::from(curr),
        update: Atomic::from(new_ref),
        payload: Atomic::from(pred_content),
        retire_expected: true,
    }));
    match pred_ref.state.compare_exchange(
        pred_word,
        cas_op.with_tag(FLAG_CHILDCAS),
        SEQ,
        SEQ,
        guard,
    ) {
        Ok(installed) => {
            retire_displaced_word(pred, pred_word, guard);
            help_child_cas(installed, pred, guard);
        }
        Err(e) => drop(e.new),
    }
}

/// Returns the tree root, installing the sentinel on first use.
fn ensure_root<'g>(slot: &Atomic<ENode>, guard: &'g Guard) -> Shared<'g, ENode> {
    loop {
        let root = slot.load(SEQ, guard);
        if !root.is_null() {
            return root;
        }
        match slot.compare_exchange(Shared::null(), ENode::sentinel(), SEQ, SEQ, guard) {
            Ok(installed) => return installed,
            Err(e) => {
                drop(e.new);
                if !e.current.is_null() {
                    return e.current;
                }
            }
        }
    }
}

/// Insert or update the edge `key` with `weight`, bumping the owner's edge
/// counter on every mutation. `revalidate` is consulted at the top of each
/// retry; returning false abandons the operation (a vertex died).
pub fn insert_or_update(
    owner: &VNode,
    key: VertexKey,
    weight: f64,
    dest: &Arc<VNode>,
    revalidate: impl Fn() -> bool,
    guard: &Guard,
) -> Option<PutEdgeOutcome> {
    loop {
        if !revalidate() {
            return None;
        }
        let root = ensure_root(&owner.enxt, guard);
        let res = find(key, root, true, guard);
        match res.status {
            FindStatus::Abort => continue,
            FindStatus::Found => {
                let payload_obj = unsafe { content(res.curr, res.curr_word, guard) };
                let payload = match unsafe { payload_obj.deref() } {
                    EdgeState::Payload(p) => p,
                    _ => unreachable!(),
                };
                if payload_dest_dead(payload) {
                    // The destination vertex died; this node is a leftover.
                    // Excise it, then retry so the put inserts a fresh edge.
                    try_remove_node(key, &res, guard);
                    continue;
                }
                if payload.weight == weight {
                    return Some(PutEdgeOutcome::UnchangedSameWeight);
                }
                let old_weight = payload.weight;
                let fresh = Owned::new(EdgeState::Payload(EdgePayload {
                    key,
                    weight,
                    dest: Some(dest.clone()),
                }));
                match unsafe { res.curr.deref() }.state.compare_exchange(
                    res.curr_word,
                    fresh.with_tag(FLAG_NONE),
                    SEQ,
                    SEQ,
                    guard,
                ) {
                    Ok(_) => {
                        retire_replaced_content(res.curr, res.curr_word, guard);
                        owner.oi.ecnt.fetch_add(1, SEQ);
                        return Some(PutEdgeOutcome::Updated(old_weight));
                    }
                    Err(e) => {
                        drop(e.new);
                        continue;
                    }
                }
            }
            FindStatus::NotFoundL | FindStatus::NotFoundR => {
                let is_left = res.status == FindStatus::NotFoundL;
                let curr_ref = unsafe { res.curr.deref() };
                let old_child = if is_left {
                    curr_ref.left.load(SEQ, guard)
                } else {
                    curr_ref.right.load(SEQ, guard)
                };
                let new_node = ENode::new_with(EdgePayload {
                    key,
                    weight,
                    dest: Some(dest.clone()),
                })
                .into_shared(guard);
                let curr_content = unsafe { content(res.curr, res.curr_word, guard) };
                let cas_op = Owned::new(EdgeState::ChildCas(ChildCasOp {
                    is_left,
                    expected: Atomic::from(old_child),
                    update: Atomic::from(new_node),
                    payload: Atomic::from(curr_content),
                    retire_expected: false,
                }));
                match curr_ref.state.compare_exchange(
                    res.curr_word,
                    cas_op.with_tag(FLAG_CHILDCAS),
                    SEQ,
                    SEQ,
                    guard,
                ) {
                    Ok(installed) => {
                        retire_displaced_word(res.curr, res.curr_word, guard);
                        owner.oi.ecnt.fetch_add(1, SEQ);
                        help_child_cas(installed, res.curr, guard);
                        return Some(PutEdgeOutcome::Inserted);
                    }
                    Err(e) => {
                        drop(e.new);
                        // The new node was never linked.
                        drop(unsafe { new_node.into_owned() });
                        continue;
                    }
                }
            }
        }
    }
}

/// Retires the old word object and its content after a weight update
/// replaced the node's logical payload.
fn retire_replaced_content(node: Shared<'_, ENode>, old: Shared<'_, EdgeState>, guard: &Guard) {
    let obj = old.with_tag(0);
    let payload = unsafe { content(node, old, guard) };
    match unsafe { obj.deref() } {
        EdgeState::Payload(_) => unsafe { guard.defer_destroy(obj) },
        EdgeState::ChildCas(_) => unsafe {
            guard.defer_destroy(obj);
            guard.defer_destroy(payload.with_tag(0));
        },
        EdgeState::Relocate(_) => {
            finish_relocate(obj, guard);
            unsafe {
                guard.defer_destroy(obj);
                guard.defer_destroy(payload.with_tag(0));
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RemoveOutcome {
    Removed(f64),
    NotFound,
}

/// One removal attempt (mark or relocate) for the node located by `res`.
/// True when this attempt's own CAS chain completed the removal; false asks
/// the caller to re-find and retry. Never touches the edge counter.
fn try_remove_node(key: VertexKey, res: &FindResult<'_>, guard: &Guard) -> bool {
    let curr_ref = unsafe { res.curr.deref() };
    let left = curr_ref.left.load(SEQ, guard);
    let right = curr_ref.right.load(SEQ, guard);
    if is_null_child(left) || is_null_child(right) {
        // Logical removal by marking, then excision via the predecessor.
        if curr_ref
            .state
            .compare_exchange(
                res.curr_word,
                res.curr_word.with_tag(FLAG_MARKED),
                SEQ,
                SEQ,
                guard,
            )
            .is_ok()
        {
            help_marked(res.pred, res.pred_word, res.curr, guard);
            return true;
        }
    } else {
        // Two children: find the next largest key in the right subtree.
        let sres = find(key, res.curr, false, guard);
        if sres.status == FindStatus::Abort || curr_ref.state.load(SEQ, guard) != res.curr_word {
            return false;
        }
        let succ = sres.curr;
        let succ_word = sres.curr_word;
        let succ_payload = unsafe { content(succ, succ_word, guard) };
        let replace_key = match unsafe { succ_payload.deref() } {
            EdgeState::Payload(p) => p.key,
            _ => unreachable!(),
        };
        let reloc = Owned::new(EdgeState::Relocate(RelocateOp {
            state: AtomicUsize::new(RELOC_ONGOING),
            dest: Atomic::from(res.curr),
            succ: Atomic::from(succ),
            dest_word: Atomic::from(res.curr_word),
            replace: Atomic::from(succ_payload),
            remove_key: key,
            replace_key,
        }));
        match unsafe { succ.deref() }.state.compare_exchange(
            succ_word,
            reloc.with_tag(FLAG_RELOCATE),
            SEQ,
            SEQ,
            guard,
        ) {
            Ok(installed) => {
                retire_displaced_word(succ, succ_word, guard);
                if help_relocate(installed, res.pred, res.pred_word, succ, guard) {
                    return true;
                }
            }
            Err(e) => drop(e.new),
        }
    }
    false
}

#[inline]
fn payload_dest_dead(payload: &EdgePayload) -> bool {
    payload.dest.as_ref().is_some_and(|d| d.is_marked())
}

/// Remove the edge `key` from the owner's tree. One-child nodes are marked
/// and excised; two-child nodes go through the relocation protocol. A node
/// whose destination vertex died is excised as physical cleanup (the edge
/// was already logically removed by the vertex removal) and reported absent.
pub fn remove(
    owner: &VNode,
    key: VertexKey,
    revalidate: impl Fn() -> bool,
    guard: &Guard,
) -> Option<RemoveOutcome> {
    loop {
        if !revalidate() {
            return None;
        }
        let root = owner.enxt.load(SEQ, guard);
        if root.is_null() {
            return Some(RemoveOutcome::NotFound);
        }
        let res = find(key, root, true, guard);
        if res.status != FindStatus::Found {
            return Some(RemoveOutcome::NotFound);
        }
        let payload = unsafe { payload_ref(res.curr, res.curr_word, guard) };
        let stale = payload_dest_dead(payload);
        let removed_weight = payload.weight;
        if try_remove_node(key, &res, guard) && !stale {
            owner.oi.ecnt.fetch_add(1, SEQ);
            return Some(RemoveOutcome::Removed(removed_weight));
        }
        // Stale cleanup or a lost race: re-find and retry.
    }
}

/// Wait-free, help-free lookup of the weight of the alive edge `key`.
pub fn read_weight(root_slot: &Atomic<ENode>, key: VertexKey, guard: &Guard) -> Option<f64> {
    let root = root_slot.load(SEQ, guard);
    if root.is_null() {
        return None;
    }
    let mut curr = root;
    let mut next = unsafe { curr.deref().right.load(SEQ, guard) };
    while !is_null_child(next) {
        curr = next.with_tag(0);
        let word = unsafe { curr.deref().state.load(SEQ, guard) };
        let payload = unsafe { payload_ref(curr, word, guard) };
        if key < payload.key {
            next = unsafe { curr.deref().left.load(SEQ, guard) };
        } else if key > payload.key {
            next = unsafe { curr.deref().right.load(SEQ, guard) };
        } else {
            if unsafe { is_alive(curr, word, guard) } && !payload_dest_dead(payload) {
                return Some(payload.weight);
            }
            return None;
        }
    }
    None
}

/// An alive edge observed during an in-order walk.
pub struct EdgeVisit<'g> {
    pub key: VertexKey,
    pub weight: f64,
    pub dest: &'g Arc<VNode>,
}

/// Non-recursive in-order traversal over the reachable tree, visiting alive
/// edges in key order. Marked nodes are traversed structurally but not
/// visited, so a pending removal cannot hide a live subtree. Never helps.
pub fn in_order_collect<'g, F: FnMut(EdgeVisit<'g>)>(
    root_slot: &Atomic<ENode>,
    guard: &'g Guard,
    mut visit: F,
) {
    let root = root_slot.load(SEQ, guard);
    if root.is_null() {
        return;
    }
    let mut stack: Vec<Shared<'g, ENode>> = Vec::new();
    let mut itn = unsafe { root.deref().right.load(SEQ, guard) };
    loop {
        while !is_null_child(itn) {
            let node = itn.with_tag(0);
            stack.push(node);
            itn = unsafe { node.deref().left.load(SEQ, guard) };
        }
        let node = match stack.pop() {
            Some(n) => n,
            None => break,
        };
        let word = unsafe { node.deref().state.load(SEQ, guard) };
        if unsafe { is_alive(node, word, guard) } {
            let payload = unsafe { payload_ref(node, word, guard) };
            if let Some(dest) = payload.dest.as_ref() {
                visit(EdgeVisit {
                    key: payload.key,
                    weight: payload.weight,
                    dest,
                });
            }
        }
        itn = unsafe { node.deref().right.load(SEQ, guard) };
    }
}

/// Quiescent check: no reachable node carries a CHILDCAS or RELOCATE flag.
pub fn assert_no_pending_descriptors(root_slot: &Atomic<ENode>, guard: &Guard) -> bool {
    let root = root_slot.load(SEQ, guard);
    if root.is_null() {
        return true;
    }
    let mut stack = vec![root];
    while let Some(node) = stack.pop() {
        let word = unsafe { node.deref().state.load(SEQ, guard) };
        if word.tag() == FLAG_CHILDCAS || word.tag() == FLAG_RELOCATE {
            return false;
        }
        for child in [
            unsafe { node.deref().left.load(SEQ, guard) },
            unsafe { node.deref().right.load(SEQ, guard) },
        ] {
            if !is_null_child(child) {
                stack.push(child.with_tag(0));
            }
        }
    }
    true
}

/// Frees every node reachable in the tree. Only sound on a quiesced graph
/// being dropped; returns the destination Arcs for deferred release.
pub(crate) unsafe fn teardown_tree(root_slot: &Atomic<ENode>) -> Vec<Arc<VNode>> {
    let guard = crossbeam_epoch::unprotected();
    let mut arcs = Vec::new();
    let root = root_slot.load(SEQ, guard);
    if root.is_null() {
        return arcs;
    }
    let mut stack = vec![root];
    let mut nodes = Vec::new();
    while let Some(node) = stack.pop() {
        nodes.push(node);
        for child in [
            node.deref().left.load(SEQ, guard),
            node.deref().right.load(SEQ, guard),
        ] {
            if !is_null_child(child) {
                stack.push(child.with_tag(0));
            }
        }
    }
    for node in nodes {
        // ENode::drop frees the state word and queues its Arc.
        let owned = node.into_owned();
        let word = owned.state.load(SEQ, guard);
        free_state_word(word, &mut arcs, guard);
        owned.state.store(Shared::null(), SEQ);
        drop(owned);
    }
    root_slot.store(Shared::null(), SEQ);
    arcs
}
