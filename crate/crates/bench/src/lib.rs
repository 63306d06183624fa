//! Benchmark-only crate; see `benches/graph_ops.rs`.
