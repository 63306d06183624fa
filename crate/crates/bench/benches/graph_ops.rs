use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use snapgraph::rmat::{self, RmatParams};
use snapgraph::{ConsistencyMode, Graph, GraphConfig};

fn load_rmat(n: u64, e: u64, seed: u64) -> Graph {
    let params = RmatParams::with_defaults(n, e, seed);
    let edges = rmat::generate(&params).unwrap();
    let g = Graph::new(GraphConfig::default());
    {
        let t = g.register().unwrap();
        for v in 0..n {
            g.put_vertex(&t, v as i64);
        }
        for edge in &edges {
            g.put_edge(&t, edge.src, edge.dst, edge.weight.unwrap_or(1.0));
        }
    }
    g
}

fn bench_vertex_ops(c: &mut Criterion) {
    let mut group = c.benchmark_group("vertex_ops");
    group.throughput(Throughput::Elements(1));
    group.bench_function("put_remove_cycle", |b| {
        let g = Graph::new(GraphConfig::default());
        let t = g.register().unwrap();
        let mut k = 0i64;
        b.iter(|| {
            g.put_vertex(&t, k);
            g.remove_vertex(&t, k);
            k = (k + 1) % 4096;
        });
    });
    group.bench_function("get_vertex_hit", |b| {
        let g = Graph::new(GraphConfig::default());
        let t = g.register().unwrap();
        for v in 0..1024 {
            g.put_vertex(&t, v);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        b.iter(|| g.get_vertex(&t, rng.gen_range(0..1024)));
    });
    group.finish();
}

fn bench_edge_ops(c: &mut Criterion) {
    let mut group = c.benchmark_group("edge_ops");
    group.throughput(Throughput::Elements(1));
    let g = load_rmat(1024, 10_000, 7);
    let t = g.register().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    group.bench_function("put_edge_update", |b| {
        b.iter(|| {
            let a = rng.gen_range(0..1024);
            let d = rng.gen_range(0..1024);
            g.put_edge(&t, a, d, rng.gen_range(1..10) as f64)
        });
    });
    group.bench_function("get_edge", |b| {
        b.iter(|| {
            let a = rng.gen_range(0..1024);
            let d = rng.gen_range(0..1024);
            g.get_edge(&t, a, d)
        });
    });
    group.finish();
}

fn bench_queries(c: &mut Criterion) {
    let mut group = c.benchmark_group("queries");
    group.sample_size(20);
    let g = load_rmat(1024, 10_000, 7);
    let t = g.register().unwrap();
    for mode in [ConsistencyMode::Linearizable, ConsistencyMode::SingleCollect] {
        let label = match mode {
            ConsistencyMode::Linearizable => "lin",
            ConsistencyMode::SingleCollect => "icn",
        };
        group.bench_with_input(BenchmarkId::new("bfs_1024_10000", label), &mode, |b, &m| {
            let mut hooks = snapgraph::snapshot::ScanHooks::default();
            b.iter(|| g.bfs_with(&t, 0, m, &mut hooks));
        });
    }
    group.bench_function("sssp_1024_10000", |b| {
        b.iter(|| g.sssp(&t, 0));
    });
    group.finish();
}

criterion_group!(benches, bench_vertex_ops, bench_edge_ops, bench_queries);
criterion_main!(benches);
