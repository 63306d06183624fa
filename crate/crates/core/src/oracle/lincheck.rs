//! History recording and an exhaustive linearizability checker.
//!
//! A history is a set of operations with invocation/response stamps drawn
//! from one global counter. The checker searches for a total order that
//! respects real-time precedence (a response before an invocation orders the
//! two operations) and replays to the recorded return values on the
//! sequential reference graph. Depth-first over the pending frontier with
//! memoized (linearized-set, state) pairs; built for histories of at most a
//! few dozen operations.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use super::SeqGraph;
use crate::types::{EdgeResult, VertexKey};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OpKind {
    PutV(VertexKey),
    RemV(VertexKey),
    GetV(VertexKey),
    PutE(VertexKey, VertexKey, f64),
    RemE(VertexKey, VertexKey),
    GetE(VertexKey, VertexKey),
}

impl OpKind {
    fn name(&self) -> &'static str {
        match self {
            OpKind::PutV(_) => "PutV",
            OpKind::RemV(_) => "RemV",
            OpKind::GetV(_) => "GetV",
            OpKind::PutE(..) => "PutE",
            OpKind::RemE(..) => "RemE",
            OpKind::GetE(..) => "GetE",
        }
    }

    fn args_string(&self) -> String {
        match self {
            OpKind::PutV(v) | OpKind::RemV(v) | OpKind::GetV(v) => format!("{v}"),
            OpKind::PutE(a, b, w) => format!("{a},{b},{w:?}"),
            OpKind::RemE(a, b) | OpKind::GetE(a, b) => format!("{a},{b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RetValue {
    Bool(bool),
    Edge(bool, f64),
}

impl RetValue {
    fn to_field(self) -> String {
        match self {
            RetValue::Bool(b) => format!("{b}"),
            RetValue::Edge(s, w) => format!("{s},{w:?}"),
        }
    }
}

impl From<EdgeResult> for RetValue {
    fn from(e: EdgeResult) -> Self {
        RetValue::Edge(e.status, e.weight)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Invoke,
    Respond,
}

/// One line of the event log.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub seq: u64,
    pub tid: usize,
    pub phase: Phase,
    pub op: OpKind,
    pub ret: Option<RetValue>,
}

/// A completed operation with its interval stamps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordedOp {
    pub tid: usize,
    pub op: OpKind,
    pub ret: RetValue,
    pub inv: u64,
    pub res: u64,
}

#[derive(Debug, Clone, Default)]
pub struct History {
    pub ops: Vec<RecordedOp>,
}

impl History {
    pub fn events(&self) -> Vec<Event> {
        let mut ev = Vec::with_capacity(self.ops.len() * 2);
        for o in &self.ops {
            ev.push(Event {
                seq: o.inv,
                tid: o.tid,
                phase: Phase::Invoke,
                op: o.op,
                ret: None,
            });
            ev.push(Event {
                seq: o.res,
                tid: o.tid,
                phase: Phase::Respond,
                op: o.op,
                ret: Some(o.ret),
            });
        }
        ev.sort_by_key(|e| e.seq);
        ev
    }
}

/// Applies one operation to the reference graph.
pub fn seq_apply(g: &mut SeqGraph, op: OpKind) -> RetValue {
    match op {
        OpKind::PutV(v) => RetValue::Bool(g.put_vertex(v)),
        OpKind::RemV(v) => RetValue::Bool(g.remove_vertex(v)),
        OpKind::GetV(v) => RetValue::Bool(g.get_vertex(v)),
        OpKind::PutE(a, b, w) => g.put_edge(a, b, w).into(),
        OpKind::RemE(a, b) => g.remove_edge(a, b).into(),
        OpKind::GetE(a, b) => g.get_edge(a, b).into(),
    }
}

fn ret_matches(a: RetValue, b: RetValue) -> bool {
    match (a, b) {
        (RetValue::Bool(x), RetValue::Bool(y)) => x == y,
        (RetValue::Edge(s1, w1), RetValue::Edge(s2, w2)) => {
            s1 == s2 && (w1 == w2 || (w1.is_infinite() && w2.is_infinite()))
        }
        _ => false,
    }
}

type CanonState = Vec<(VertexKey, Vec<(VertexKey, u64)>)>;

fn canon_state(g: &SeqGraph) -> CanonState {
    g.vertices()
        .into_iter()
        .map(|v| {
            (
                v,
                g.out_edges(v)
                    .into_iter()
                    .map(|(n, w)| (n, w.to_bits()))
                    .collect(),
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinFailure {
    /// Index (into history.ops) of the earliest-invoked operation the search
    /// could never linearize.
    pub op_index: usize,
    pub op: OpKind,
    pub ret: RetValue,
}

/// True iff some total order consistent with real-time precedence replays to
/// the observed return values on `initial`.
pub fn check_linearizable(history: &History, initial: &SeqGraph) -> Result<(), LinFailure> {
    let n = history.ops.len();
    assert!(n <= 32, "exhaustive checker bound exceeded: {n} ops");
    if n == 0 {
        return Ok(());
    }
    let mut memo: HashSet<(u32, CanonState)> = HashSet::new();
    let mut deepest: u32 = 0;

    fn dfs(
        ops: &[RecordedOp],
        done: u32,
        state: &SeqGraph,
        memo: &mut HashSet<(u32, CanonState)>,
        deepest: &mut u32,
    ) -> bool {
        let n = ops.len();
        if done.count_ones() as usize == n {
            return true;
        }
        if !memo.insert((done, canon_state(state))) {
            return false;
        }
        if done.count_ones() > deepest.count_ones() {
            *deepest = done;
        }
        // An op may go next iff no other pending op responded before it was
        // invoked.
        let min_res = ops
            .iter()
            .enumerate()
            .filter(|(i, _)| done & (1 << i) == 0)
            .map(|(_, o)| o.res)
            .min()
            .unwrap();
        for (i, o) in ops.iter().enumerate() {
            if done & (1 << i) != 0 || o.inv > min_res {
                continue;
            }
            let mut next = state.clone();
            if !ret_matches(seq_apply(&mut next, o.op), o.ret) {
                continue;
            }
            if dfs(ops, done | (1 << i), &next, memo, deepest) {
                return true;
            }
        }
        false
    }

    if dfs(&history.ops, 0, initial, &mut memo, &mut deepest) {
        Ok(())
    } else {
        // Earliest-invoked op missing from the deepest frontier reached.
        let mut idxs: Vec<usize> = (0..n).filter(|i| deepest & (1 << i) == 0).collect();
        idxs.sort_by_key(|&i| history.ops[i].inv);
        let i = idxs[0];
        Err(LinFailure {
            op_index: i,
            op: history.ops[i].op,
            ret: history.ops[i].ret,
        })
    }
}

/// Writes the event log: one event per line, tab-separated
/// `seq  tid  phase(I/R)  op  args  ret`.
pub fn write_history<W: Write>(history: &History, mut w: W) -> std::io::Result<()> {
    for e in history.events() {
        let phase = match e.phase {
            Phase::Invoke => "I",
            Phase::Respond => "R",
        };
        let ret = e.ret.map(|r| r.to_field()).unwrap_or_default();
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}",
            e.seq,
            e.tid,
            phase,
            e.op.name(),
            e.op.args_string(),
            ret
        )?;
    }
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum HistoryParseError {
    #[error("line {0}: {1}")]
    Malformed(usize, String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Parses an event log back into a history. Events must pair up per thread.
pub fn parse_history<R: BufRead>(r: R) -> Result<History, HistoryParseError> {
    let mut pending: std::collections::HashMap<usize, (OpKind, u64)> =
        std::collections::HashMap::new();
    let mut ops = Vec::new();
    for (ln, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |m: &str| HistoryParseError::Malformed(ln + 1, m.to_string());
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 5 {
            return Err(bad("expected at least 5 tab-separated fields"));
        }
        let seq: u64 = fields[0].parse().map_err(|_| bad("bad seq"))?;
        let tid: usize = fields[1].parse().map_err(|_| bad("bad tid"))?;
        let args: Vec<&str> = fields[4].split(',').collect();
        let arg = |i: usize| args.get(i).copied().ok_or_else(|| bad("missing argument"));
        let key = |s: &str| s.trim().parse::<VertexKey>().map_err(|_| bad("bad key"));
        let op = match fields[3] {
            "PutV" => OpKind::PutV(key(arg(0)?)?),
            "RemV" => OpKind::RemV(key(arg(0)?)?),
            "GetV" => OpKind::GetV(key(arg(0)?)?),
            "PutE" => OpKind::PutE(
                key(arg(0)?)?,
                key(arg(1)?)?,
                arg(2)?.trim().parse().map_err(|_| bad("bad weight"))?,
            ),
            "RemE" => OpKind::RemE(key(arg(0)?)?, key(arg(1)?)?),
            "GetE" => OpKind::GetE(key(arg(0)?)?, key(arg(1)?)?),
            other => return Err(bad(&format!("unknown op {other}"))),
        };
        match fields[2] {
            "I" => {
                pending.insert(tid, (op, seq));
            }
            "R" => {
                let (inv_op, inv) = pending
                    .remove(&tid)
                    .ok_or_else(|| bad("response without invocation"))?;
                if inv_op != op {
                    return Err(bad("response op differs from invocation"));
                }
                if fields.len() < 6 {
                    return Err(bad("response line missing return value"));
                }
                let ret_fields: Vec<&str> = fields[5].split(',').collect();
                let ret = match op {
                    OpKind::PutV(_) | OpKind::RemV(_) | OpKind::GetV(_) => RetValue::Bool(
                        ret_fields[0].trim().parse().map_err(|_| bad("bad ret"))?,
                    ),
                    _ => {
                        if ret_fields.len() < 2 {
                            return Err(bad("edge return needs status and weight"));
                        }
                        RetValue::Edge(
                            ret_fields[0].trim().parse().map_err(|_| bad("bad ret"))?,
                            ret_fields[1].trim().parse().map_err(|_| bad("bad ret"))?,
                        )
                    }
                };
                ops.push(RecordedOp {
                    tid,
                    op,
                    ret,
                    inv,
                    res: seq,
                });
            }
            other => return Err(bad(&format!("unknown phase {other}"))),
        }
    }
    Ok(History { ops })
}
