//! Sequential reference implementation of the ADT, brute-force query
//! oracles, and an exhaustive linearizability checker for small recorded
//! histories.

mod lincheck;
mod seq_graph;

pub use lincheck::{
    check_linearizable, parse_history, seq_apply, write_history, Event, History, LinFailure, OpKind, Phase,
    RecordedOp, RetValue,
};
pub use seq_graph::SeqGraph;
