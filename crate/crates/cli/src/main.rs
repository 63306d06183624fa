//! Command-line front end: R-MAT generation, the benchmark runner, and the
//! all-sources betweenness-centrality report.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use snapgraph::harness::{self, QueryKind, WorkloadSpec};
use snapgraph::rmat::{self, RmatMeta, RmatParams};
use snapgraph::{ConsistencyMode, Graph, GraphConfig};

#[derive(Parser)]
#[command(name = "snapgraph", about = "Concurrent graph benchmark tool")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum QueryArg {
    Bfs,
    Sssp,
    Bc,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Linearizable: repeated collection until two consecutive snapshots match.
    Lin,
    /// Inconsistent: a single collect, no validation.
    Icn,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an R-MAT graph in adjacency format.
    Gen {
        #[arg(long)]
        vertices: u64,
        /// Defaults to 10x the vertex count.
        #[arg(long)]
        edges: Option<u64>,
        #[arg(long, default_value_t = 0.5)]
        a: f64,
        #[arg(long, default_value_t = 0.1)]
        b: f64,
        #[arg(long, default_value_t = 0.1)]
        c: f64,
        #[arg(long, default_value_t = 0.3)]
        d: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = false)]
        weighted: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a workload distribution against a graph file.
    Bench {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 4)]
        threads: usize,
        /// Distribution update/search/query, e.g. 40/10/50.
        #[arg(long, default_value = "40/10/50")]
        dist: String,
        #[arg(long, value_enum, default_value_t = QueryArg::Bfs)]
        query: QueryArg,
        #[arg(long, default_value_t = 10_000)]
        ops: u64,
        #[arg(long, default_value_t = 0.05)]
        warmup: f64,
        #[arg(long, value_enum, default_value_t = ModeArg::Lin)]
        mode: ModeArg,
        #[arg(long, default_value_t = 5)]
        iters: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Per-query starvation timeout in seconds.
        #[arg(long, default_value_t = 30)]
        timeout: u64,
        /// Append one CSV row (with header when the file is new).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// All-sources betweenness centrality of a loaded graph.
    BcFull {
        #[arg(long)]
        graph: PathBuf,
        /// Print only this vertex instead of all.
        #[arg(long)]
        vertex: Option<i64>,
    },
}

fn parse_dist(s: &str) -> Result<(u32, u32, u32), String> {
    let parts: Vec<&str> = s.split('/').collect();
    if parts.len() != 3 {
        return Err(format!("distribution `{s}` must look like 40/10/50"));
    }
    let p: Result<Vec<u32>, _> = parts.iter().map(|x| x.parse()).collect();
    let p = p.map_err(|_| format!("distribution `{s}` has non-numeric parts"))?;
    Ok((p[0], p[1], p[2]))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Gen {
            vertices,
            edges,
            a,
            b,
            c,
            d,
            seed,
            weighted,
            out,
        } => {
            let params = RmatParams {
                n_vertices: vertices,
                n_edges: edges.unwrap_or(vertices.saturating_mul(10)),
                a,
                b,
                c,
                d,
                seed,
                weighted,
            };
            let generated = rmat::generate(&params)?;
            let file = File::create(&out)?;
            let mut w = BufWriter::new(file);
            rmat::write_adjacency(params.n_vertices, &generated, &mut w)?;
            w.flush()?;
            let meta_path = out.with_extension("meta.json");
            let meta = RmatMeta::new(params);
            std::fs::write(&meta_path, serde_json::to_string_pretty(&meta)?)?;
            println!(
                "wrote {} edges to {} (metadata {})",
                generated.len(),
                out.display(),
                meta_path.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench {
            graph,
            threads,
            dist,
            query,
            ops,
            warmup,
            mode,
            iters,
            seed,
            timeout,
            csv,
        } => {
            let (update_pct, search_pct, query_pct) = parse_dist(&dist)?;
            let spec = WorkloadSpec {
                update_pct,
                search_pct,
                query_pct,
                query_kind: match query {
                    QueryArg::Bfs => QueryKind::Bfs,
                    QueryArg::Sssp => QueryKind::Sssp,
                    QueryArg::Bc => QueryKind::Bc,
                },
                total_ops: ops,
                warmup_fraction: warmup,
                threads,
                mode: match mode {
                    ModeArg::Lin => ConsistencyMode::Linearizable,
                    ModeArg::Icn => ConsistencyMode::SingleCollect,
                },
                iterations: iters,
                seed,
                query_timeout: Duration::from_secs(timeout),
            };
            if let Err(e) = spec.validate() {
                eprintln!("error: {e}");
                return Ok(ExitCode::from(2));
            }
            let parsed = rmat::read_adjacency(BufReader::new(File::open(&graph)?))?;
            let label = graph
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| graph.display().to_string());
            match harness::run(&spec, &parsed, &label) {
                Ok(report) => {
                    let m = report.median();
                    println!(
                        "{label}: threads={threads} dist={dist} query={} mode={} \
                         median_wall={:.4}s throughput={:.0} ops/s \
                         mean_collects={:.2} mean_interrupting_updates={:.2}",
                        report.query_kind,
                        match spec.mode {
                            ConsistencyMode::Linearizable => "lin",
                            ConsistencyMode::SingleCollect => "icn",
                        },
                        m.wall.as_secs_f64(),
                        report.throughput_ops_per_sec(),
                        m.mean_collects(),
                        m.mean_interrupting_updates(),
                    );
                    if let Some(path) = csv {
                        let existed = path.exists();
                        let file = std::fs::OpenOptions::new()
                            .create(true)
                            .append(true)
                            .open(&path)?;
                        let mut w = BufWriter::new(file);
                        if existed {
                            // Header already written by the first run.
                            let mut buf = Vec::new();
                            harness::emit_csv(std::slice::from_ref(&report), &mut buf)?;
                            let text = String::from_utf8_lossy(&buf);
                            if let Some(row) = text.lines().nth(1) {
                                writeln!(w, "{row}")?;
                            }
                        } else {
                            harness::emit_csv(std::slice::from_ref(&report), &mut w)?;
                        }
                        w.flush()?;
                    }
                    Ok(ExitCode::SUCCESS)
                }
                Err(harness::HarnessError::Starvation(t)) => {
                    eprintln!("starvation: a query exceeded {t:?}; run aborted");
                    Ok(ExitCode::from(3))
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    Ok(ExitCode::from(2))
                }
            }
        }
        Command::BcFull { graph, vertex } => {
            let parsed = rmat::read_adjacency(BufReader::new(File::open(&graph)?))?;
            let g = Graph::new(GraphConfig::default());
            let token = g.register()?;
            for v in 0..parsed.n_vertices {
                g.put_vertex(&token, v as i64);
            }
            for e in &parsed.edges {
                g.put_edge(&token, e.src, e.dst, e.weight.unwrap_or(1.0));
            }
            let scores = g.bc_all(&token).expect("graph is non-empty");
            match vertex {
                Some(v) => match scores.get(v) {
                    Some(s) => println!("{v}\t{s}"),
                    None => {
                        eprintln!("vertex {v} not present");
                        return Ok(ExitCode::from(2));
                    }
                },
                None => {
                    // Tolerate a closed pipe (e.g. piped into head).
                    let stdout = std::io::stdout();
                    let mut out = BufWriter::new(stdout.lock());
                    for (k, s) in &scores.scores {
                        if writeln!(out, "{k}\t{s}").is_err() {
                            break;
                        }
                    }
                    let _ = out.flush();
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
