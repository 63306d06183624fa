//! Workload runner: loads an R-MAT graph, spawns a fixed set of threads,
//! executes a random operation mix after a warm-up, and reports end-to-end
//! latency plus query-internals metrics, taking the median over iterations.

use std::io::Write;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Barrier, Mutex};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{Graph, GraphConfig, ThreadToken};
use crate::oracle::{History, OpKind, RecordedOp, RetValue, SeqGraph};
use crate::rmat::ParsedAdjacency;
use crate::snapshot::ScanHooks;
use crate::types::{ConsistencyMode, VertexKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryKind {
    Bfs,
    Sssp,
    Bc,
}

impl std::fmt::Display for QueryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            QueryKind::Bfs => "bfs",
            QueryKind::Sssp => "sssp",
            QueryKind::Bc => "bc",
        })
    }
}

/// A distribution over the operation families plus run parameters. The
/// update percentage splits equally across PutV/RemV/PutE/RemE and the
/// search percentage across GetV/GetE.
#[derive(Debug, Clone)]
pub struct WorkloadSpec {
    pub update_pct: u32,
    pub search_pct: u32,
    pub query_pct: u32,
    pub query_kind: QueryKind,
    pub total_ops: u64,
    pub warmup_fraction: f64,
    pub threads: usize,
    pub mode: ConsistencyMode,
    pub iterations: u32,
    pub seed: u64,
    pub query_timeout: Duration,
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.update_pct + self.search_pct + self.query_pct != 100 {
            return Err(HarnessError::Config(format!(
                "distribution {}/{}/{} does not sum to 100",
                self.update_pct, self.search_pct, self.query_pct
            )));
        }
        if self.threads == 0 {
            return Err(HarnessError::Config("at least one thread".into()));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(HarnessError::Config("warmup fraction in [0, 1)".into()));
        }
        if self.iterations == 0 {
            return Err(HarnessError::Config("at least one iteration".into()));
        }
        Ok(())
    }

    pub fn dist_label(&self) -> String {
        format!("{}/{}/{}", self.update_pct, self.search_pct, self.query_pct)
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("query starved past {0:?}; run aborted")]
    Starvation(Duration),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("post-run validation failed: {0}")]
    Validation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpClass {
    PutV,
    RemV,
    PutE,
    RemE,
    GetV,
    GetE,
    Query,
}

pub const OP_CLASSES: [OpClass; 7] = [
    OpClass::PutV,
    OpClass::RemV,
    OpClass::PutE,
    OpClass::RemE,
    OpClass::GetV,
    OpClass::GetE,
    OpClass::Query,
];

impl OpClass {
    fn column(&self) -> &'static str {
        match self {
            OpClass::PutV => "put_v",
            OpClass::RemV => "rem_v",
            OpClass::PutE => "put_e",
            OpClass::RemE => "rem_e",
            OpClass::GetV => "get_v",
            OpClass::GetE => "get_e",
            OpClass::Query => "query",
        }
    }
}

/// One generated operation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WorkOp {
    PutV(VertexKey),
    RemV(VertexKey),
    PutE(VertexKey, VertexKey, f64),
    RemE(VertexKey, VertexKey),
    GetV(VertexKey),
    GetE(VertexKey, VertexKey),
    Query(VertexKey),
}

impl WorkOp {
    pub fn class(&self) -> OpClass {
        match self {
            WorkOp::PutV(_) => OpClass::PutV,
            WorkOp::RemV(_) => OpClass::RemV,
            WorkOp::PutE(..) => OpClass::PutE,
            WorkOp::RemE(..) => OpClass::RemE,
            WorkOp::GetV(_) => OpClass::GetV,
            WorkOp::GetE(..) => OpClass::GetE,
            WorkOp::Query(_) => OpClass::Query,
        }
    }
}

/// Deterministic per-thread operation stream. Update and search keys are
/// drawn from twice the initial key range so both present and absent keys
/// are hit; query sources come from the initially loaded range.
pub fn op_stream(
    spec: &WorkloadSpec,
    initial_vertices: u64,
    thread_idx: usize,
    count: u64,
) -> Vec<WorkOp> {
    let mut rng = thread_rng_for(spec.seed, thread_idx);
    let key_range = (2 * initial_vertices).max(1) as VertexKey;
    let source_range = initial_vertices.max(1) as VertexKey;
    let max_w = (64 - initial_vertices.leading_zeros()).max(1) as i64;
    let mut out = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let roll = rng.gen_range(0u32..100);
        let op = if roll < spec.update_pct {
            match roll % 4 {
                0 => WorkOp::PutV(rng_key(&mut rng, key_range)),
                1 => WorkOp::RemV(rng_key(&mut rng, key_range)),
                2 => {
                    let a = rng_key(&mut rng, key_range);
                    let b = rng_key(&mut rng, key_range);
                    let w = rng.gen_range(1..=max_w) as f64;
                    WorkOp::PutE(a, b, w)
                }
                _ => {
                    let a = rng_key(&mut rng, key_range);
                    let b = rng_key(&mut rng, key_range);
                    WorkOp::RemE(a, b)
                }
            }
        } else if roll < spec.update_pct + spec.search_pct {
            if roll % 2 == 0 {
                WorkOp::GetV(rng_key(&mut rng, key_range))
            } else {
                let a = rng_key(&mut rng, key_range);
                let b = rng_key(&mut rng, key_range);
                WorkOp::GetE(a, b)
            }
        } else {
            WorkOp::Query(rng.gen_range(0..source_range))
        };
        out.push(op);
    }
    out
}

fn thread_rng_for(seed: u64, thread_idx: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e3779b97f4a7c15) ^ (thread_idx as u64 + 1))
}

fn rng_key(rng: &mut ChaCha8Rng, range: VertexKey) -> VertexKey {
    rng.gen_range(0..range)
}

#[derive(Debug, Clone, Default)]
pub struct ClassStats {
    pub count: u64,
    pub total: Duration,
}

impl ClassStats {
    pub fn mean_ns(&self) -> u64 {
        if self.count == 0 {
            0
        } else {
            (self.total.as_nanos() / self.count as u128) as u64
        }
    }
}

/// Counters from one iteration.
#[derive(Debug, Clone, Default)]
pub struct IterationStats {
    pub wall: Duration,
    pub per_class: std::collections::HashMap<OpClass, ClassStats>,
    pub query_collects: u64,
    pub interrupting_updates: u64,
    pub queries: u64,
    pub starved: bool,
}

impl IterationStats {
    pub fn mean_collects(&self) -> f64 {
        if self.queries == 0 {
            0.0
        } else {
            self.query_collects as f64 / self.queries as f64
        }
    }

    pub fn mean_interrupting_updates(&self) -> f64 {
        if self.queries == 0 {
            0.0
        } else {
            self.interrupting_updates as f64 / self.queries as f64
        }
    }
}

/// Full report: all iterations plus the median pick.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub graph_label: String,
    pub spec_threads: usize,
    pub dist: String,
    pub query_kind: QueryKind,
    pub mode: ConsistencyMode,
    pub total_ops: u64,
    pub iterations: Vec<IterationStats>,
    pub seed: u64,
    /// Index of the median-wall-time iteration.
    pub median_idx: usize,
}

impl RunReport {
    pub fn median(&self) -> &IterationStats {
        &self.iterations[self.median_idx]
    }

    pub fn throughput_ops_per_sec(&self) -> f64 {
        let m = self.median();
        let timed: u64 = m.per_class.values().map(|c| c.count).sum();
        timed as f64 / m.wall.as_secs_f64().max(1e-12)
    }
}

fn mode_label(mode: ConsistencyMode) -> &'static str {
    match mode {
        ConsistencyMode::Linearizable => "lin",
        ConsistencyMode::SingleCollect => "icn",
    }
}

struct ThreadOutcome {
    stats: IterationStats,
    starved: bool,
}

fn run_thread(
    graph: &Graph,
    token: &ThreadToken<'_>,
    spec: &WorkloadSpec,
    ops: &[WorkOp],
    warmup: usize,
    barrier: &Barrier,
    stop: &AtomicBool,
) -> ThreadOutcome {
    let mut stats = IterationStats::default();
    let mut starved = false;
    let exec = |op: &WorkOp, stats: Option<&mut IterationStats>| {
        let start = Instant::now();
        let mut collects = 0u64;
        let mut interrupting = 0u64;
        let mut aborted = false;
        match *op {
            WorkOp::PutV(v) => {
                graph.put_vertex(token, v);
            }
            WorkOp::RemV(v) => {
                graph.remove_vertex(token, v);
            }
            WorkOp::PutE(a, b, w) => {
                graph.put_edge(token, a, b, w);
            }
            WorkOp::RemE(a, b) => {
                graph.remove_edge(token, a, b);
            }
            WorkOp::GetV(v) => {
                graph.get_vertex(token, v);
            }
            WorkOp::GetE(a, b) => {
                graph.get_edge(token, a, b);
            }
            WorkOp::Query(v) => {
                let deadline = Instant::now() + spec.query_timeout;
                let mut keep = |_done: u64| Instant::now() < deadline;
                let mut hooks = ScanHooks {
                    between_collects: Some(&mut keep),
                };
                let before = graph.update_clock_now();
                let qstats = match spec.query_kind {
                    QueryKind::Bfs => graph.bfs_with(token, v, spec.mode, &mut hooks).1,
                    QueryKind::Sssp => graph.sssp_with(token, v, spec.mode, &mut hooks).1,
                    QueryKind::Bc => graph
                        .bc_single_source(token, v, spec.mode, &mut hooks)
                        .map(|p| p.stats)
                        .unwrap_or_default(),
                };
                interrupting = graph.update_clock_now() - before;
                collects = qstats.collects;
                aborted = qstats.aborted;
            }
        }
        if let Some(stats) = stats {
            let elapsed = start.elapsed();
            let entry = stats.per_class.entry(op.class()).or_default();
            entry.count += 1;
            entry.total += elapsed;
            if op.class() == OpClass::Query {
                stats.queries += 1;
                stats.query_collects += collects;
                stats.interrupting_updates += interrupting;
            }
        }
        aborted
    };

    for op in &ops[..warmup] {
        exec(op, None);
    }
    barrier.wait();
    for op in &ops[warmup..] {
        if stop.load(Ordering::Relaxed) {
            break;
        }
        if exec(op, Some(&mut stats)) {
            starved = true;
            stats.starved = true;
            stop.store(true, Ordering::Relaxed);
            break;
        }
    }
    ThreadOutcome { stats, starved }
}

/// Executes the workload `spec.iterations` times against fresh graphs loaded
/// from `parsed`, returning the per-iteration stats with the median marked.
pub fn run(spec: &WorkloadSpec, parsed: &ParsedAdjacency, graph_label: &str) -> Result<RunReport, HarnessError> {
    spec.validate()?;
    let mut iterations = Vec::with_capacity(spec.iterations as usize);
    for _ in 0..spec.iterations {
        iterations.push(run_iteration(spec, parsed)?);
    }
    let mut order: Vec<usize> = (0..iterations.len()).collect();
    order.sort_by_key(|&i| iterations[i].wall);
    let median_idx = order[order.len() / 2];
    Ok(RunReport {
        graph_label: graph_label.to_string(),
        spec_threads: spec.threads,
        dist: spec.dist_label(),
        query_kind: spec.query_kind,
        mode: spec.mode,
        total_ops: spec.total_ops,
        iterations,
        seed: spec.seed,
        median_idx,
    })
}

fn run_iteration(spec: &WorkloadSpec, parsed: &ParsedAdjacency) -> Result<IterationStats, HarnessError> {
    let graph = Graph::new(GraphConfig {
        thread_capacity: spec.threads + 1,
        ..GraphConfig::default()
    });
    let loader = graph.register().expect("loader slot");
    for v in 0..parsed.n_vertices {
        graph.put_vertex(&loader, v as VertexKey);
    }
    for e in &parsed.edges {
        graph.put_edge(&loader, e.src, e.dst, e.weight.unwrap_or(1.0));
    }
    drop(loader);

    // Split ops across threads; first threads take the remainder.
    let base = spec.total_ops / spec.threads as u64;
    let extra = (spec.total_ops % spec.threads as u64) as usize;
    let barrier = Barrier::new(spec.threads + 1);
    let stop = AtomicBool::new(false);
    let outcomes: Mutex<Vec<ThreadOutcome>> = Mutex::new(Vec::new());

    let wall = std::thread::scope(|s| {
        let mut handles = Vec::with_capacity(spec.threads);
        for t in 0..spec.threads {
            let count = base + u64::from(t < extra);
            let warmup = (count as f64 * spec.warmup_fraction).ceil() as usize;
            let ops = op_stream(spec, parsed.n_vertices as u64, t, count + warmup as u64);
            let graph = &graph;
            let barrier = &barrier;
            let stop = &stop;
            let outcomes = &outcomes;
            let spec = &*spec;
            handles.push(s.spawn(move || {
                let token = graph.register().expect("worker slot");
                let outcome = run_thread(graph, &token, spec, &ops, warmup, barrier, stop);
                outcomes.lock().unwrap().push(outcome);
            }));
        }
        barrier.wait();
        let t0 = Instant::now();
        for h in handles {
            h.join().expect("worker panicked");
        }
        t0.elapsed()
    });

    let outcomes = outcomes.into_inner().unwrap();
    let mut total = IterationStats {
        wall,
        ..Default::default()
    };
    let mut starved = false;
    for o in outcomes {
        starved |= o.starved;
        total.queries += o.stats.queries;
        total.query_collects += o.stats.query_collects;
        total.interrupting_updates += o.stats.interrupting_updates;
        total.starved |= o.stats.starved;
        for (class, cs) in o.stats.per_class {
            let entry = total.per_class.entry(class).or_default();
            entry.count += cs.count;
            entry.total += cs.total;
        }
    }
    if starved {
        return Err(HarnessError::Starvation(spec.query_timeout));
    }
    Ok(total)
}

/// Writes one CSV row per report with a stable header.
pub fn emit_csv<W: Write>(reports: &[RunReport], mut w: W) -> std::io::Result<()> {
    write!(w, "graph,threads,dist,query,mode,ops,iters,seed,wall_s")?;
    for c in OP_CLASSES {
        write!(w, ",{}_count,{}_mean_ns", c.column(), c.column())?;
    }
    writeln!(w, ",mean_query_collects,mean_interrupting_updates,throughput_ops_s")?;
    for r in reports {
        let m = r.median();
        write!(
            w,
            "{},{},{},{},{},{},{},{},{:.6}",
            r.graph_label,
            r.spec_threads,
            r.dist,
            r.query_kind,
            mode_label(r.mode),
            r.total_ops,
            r.iterations.len(),
            r.seed,
            m.wall.as_secs_f64()
        )?;
        for c in OP_CLASSES {
            let cs = m.per_class.get(&c).cloned().unwrap_or_default();
            write!(w, ",{},{}", cs.count, cs.mean_ns())?;
        }
        writeln!(
            w,
            ",{:.3},{:.3},{:.1}",
            m.mean_collects(),
            m.mean_interrupting_updates(),
            r.throughput_ops_per_sec()
        )?;
    }
    Ok(())
}

/// Dumps the quiesced concurrent graph into the sequential reference.
pub fn dump_to_oracle(graph: &Graph, token: &ThreadToken<'_>) -> SeqGraph {
    let mut seq = SeqGraph::new();
    let keys = graph.vertex_keys(token);
    for &k in &keys {
        seq.put_vertex(k);
    }
    for &k in &keys {
        for (dst, w) in graph.out_edges(token, k) {
            if seq.get_vertex(dst) {
                seq.put_edge(k, dst, w);
            }
        }
    }
    seq
}

/// Post-run integrity: structural invariants plus oracle agreement of BFS
/// and SSSP from `sample_sources` sources.
pub fn validate_post_run(
    graph: &Graph,
    token: &ThreadToken<'_>,
    sample_sources: usize,
) -> Result<(), HarnessError> {
    graph
        .check_structural_invariants(token)
        .map_err(HarnessError::Validation)?;
    let seq = dump_to_oracle(graph, token);
    let keys = graph.vertex_keys(token);
    for &k in keys.iter().take(sample_sources) {
        let bfs = graph
            .bfs(token, k)
            .ok_or_else(|| HarnessError::Validation(format!("bfs({k}) absent post-run")))?;
        let oracle = seq.bfs(k).unwrap();
        let got = bfs.levels();
        let want: Vec<(VertexKey, u32)> = {
            let mut v: Vec<_> = oracle.iter().map(|&(k, l, _)| (k, l)).collect();
            v.sort_unstable();
            v
        };
        if got != want {
            return Err(HarnessError::Validation(format!(
                "bfs({k}) disagrees with oracle"
            )));
        }
        let sp = graph
            .sssp(token, k)
            .map_err(|e| HarnessError::Validation(format!("sssp({k}) absent: {e:?}")))?;
        let (bf, cycle) = seq.bellman_ford(k).unwrap();
        if cycle {
            return Err(HarnessError::Validation(
                "oracle reports negative cycle on nonnegative weights".into(),
            ));
        }
        let got: Vec<(VertexKey, f64)> = sp.distances();
        let want: Vec<(VertexKey, f64)> = bf.into_iter().collect();
        if got != want {
            return Err(HarnessError::Validation(format!(
                "sssp({k}) disagrees with oracle"
            )));
        }
    }
    Ok(())
}

/// Records a random concurrent history of vertex/edge operations for the
/// linearizability checker.
pub fn record_random_history(
    threads: usize,
    ops_per_thread: usize,
    key_range: VertexKey,
    seed: u64,
) -> History {
    let graph = Graph::new(GraphConfig {
        thread_capacity: threads + 1,
        ..GraphConfig::default()
    });
    let clock = AtomicU64::new(0);
    let recorded: Mutex<Vec<RecordedOp>> = Mutex::new(Vec::new());
    std::thread::scope(|s| {
        for t in 0..threads {
            let graph = &graph;
            let clock = &clock;
            let recorded = &recorded;
            s.spawn(move || {
                let token = graph.register().expect("slot");
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (t as u64) << 8);
                let mut local = Vec::with_capacity(ops_per_thread);
                for _ in 0..ops_per_thread {
                    let k = rng.gen_range(0..key_range);
                    let k2 = rng.gen_range(0..key_range);
                    let w = rng.gen_range(1..=4) as f64;
                    let op = match rng.gen_range(0u32..6) {
                        0 => OpKind::PutV(k),
                        1 => OpKind::RemV(k),
                        2 => OpKind::GetV(k),
                        3 => OpKind::PutE(k, k2, w),
                        4 => OpKind::RemE(k, k2),
                        _ => OpKind::GetE(k, k2),
                    };
                    let inv = clock.fetch_add(1, Ordering::SeqCst);
                    let ret = match op {
                        OpKind::PutV(v) => RetValue::Bool(graph.put_vertex(&token, v)),
                        OpKind::RemV(v) => RetValue::Bool(graph.remove_vertex(&token, v)),
                        OpKind::GetV(v) => RetValue::Bool(graph.get_vertex(&token, v)),
                        OpKind::PutE(a, b, w) => graph.put_edge(&token, a, b, w).into(),
                        OpKind::RemE(a, b) => graph.remove_edge(&token, a, b).into(),
                        OpKind::GetE(a, b) => graph.get_edge(&token, a, b).into(),
                    };
                    let res = clock.fetch_add(1, Ordering::SeqCst);
                    local.push(RecordedOp {
                        tid: token.tid(),
                        op,
                        ret,
                        inv,
                        res,
                    });
                }
                recorded.lock().unwrap().extend(local);
            });
        }
    });
    History {
        ops: recorded.into_inner().unwrap(),
    }
}
