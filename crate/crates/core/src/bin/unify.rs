use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use unify::harness::bench::{cached_ground_truth, run_benchmark, run_query, BenchConfig, Mode};
use unify::harness::inclusivity::{measure_inclusiveness, validate_sig_knng};
use unify::harness::io::{load_dataset, read_workload, save_dataset, write_workload};
use unify::harness::scaling::{linear_fit, log_fit, run_scaling, ScalingConfig};
use unify::harness::synth::{gen_synthetic, gen_workload, WidthSpec};
use unify::hnsw::default_level_mult;
use unify::selector::{calibrate, CalibrationConfig};
use unify::{Error, HsigIndex, HsigParams, NeighborSelection, RangeQuery, Result, SearchParams, Thresholds};

#[derive(Parser)]
#[command(name = "unify", version, about = "Range-filtered approximate nearest neighbor search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct BuildFlags {
    /// Number of attribute segments (S).
    #[arg(long, default_value_t = 8)]
    segments: usize,
    /// Per-chunk degree (M).
    #[arg(long, default_value_t = 16)]
    max_degree: usize,
    #[arg(long, default_value_t = 200)]
    ef_construction: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

impl BuildFlags {
    fn params(&self) -> HsigParams {
        HsigParams {
            segments: self.segments,
            max_degree: self.max_degree,
            ef_construction: self.ef_construction,
            level_mult: default_level_mult(self.max_degree),
            seed: self.seed,
            ..HsigParams::default()
        }
    }
}

#[derive(Args, Clone)]
struct SearchFlags {
    #[arg(long, default_value_t = 100)]
    ef: usize,
    /// Neighbors followed per hop in hybrid search.
    #[arg(long, default_value_t = 16)]
    m: usize,
    /// Follow the m globally closest neighbors instead of a per-chunk share.
    #[arg(long)]
    global_selection: bool,
    /// pre, post, hybrid or auto.
    #[arg(long, default_value = "auto")]
    strategy: Mode,
    /// Threshold file from `calibrate`; defaults to 1% and 50% of n.
    #[arg(long)]
    thresholds: Option<PathBuf>,
}

impl SearchFlags {
    fn params(&self) -> SearchParams {
        let selection = if self.global_selection { NeighborSelection::Global } else { NeighborSelection::PerChunk };
        SearchParams::new(self.ef, self.m).with_selection(selection)
    }

    fn thresholds(&self, n: usize) -> Result<Thresholds> {
        match &self.thresholds {
            Some(p) => Thresholds::load(p),
            None => Ok(Thresholds::defaults(n)),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset (fvecs + attribute file).
    GenData {
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 16)]
        dim: usize,
        #[arg(long, default_value_t = 0.0)]
        attr_low: f64,
        #[arg(long, default_value_t = 10_000.0)]
        attr_high: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        vectors: PathBuf,
        #[arg(long)]
        attributes: PathBuf,
    },
    /// Generate a range-query workload over a dataset.
    GenWorkload {
        #[arg(long)]
        vectors: PathBuf,
        #[arg(long)]
        attributes: PathBuf,
        #[arg(long, default_value_t = 1000)]
        queries: usize,
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// Fixed width fraction; log-uniform over [min-width, max-width] if absent.
        #[arg(long)]
        width: Option<f64>,
        #[arg(long, default_value_t = 0.001)]
        min_width: f64,
        #[arg(long, default_value_t = 1.0)]
        max_width: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build an index from a dataset.
    Build {
        #[arg(long)]
        vectors: PathBuf,
        #[arg(long)]
        attributes: PathBuf,
        #[command(flatten)]
        build: BuildFlags,
        #[arg(long)]
        out: PathBuf,
    },
    /// Append objects to an existing index.
    Insert {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        vectors: PathBuf,
        #[arg(long)]
        attributes: PathBuf,
        /// Output path; the input index is overwritten if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Answer one query, or every query of a workload.
    Search {
        #[arg(long)]
        index: PathBuf,
        /// Comma-separated query vector.
        #[arg(long, required_unless_present = "workload", conflicts_with = "workload")]
        query: Option<String>,
        #[arg(long)]
        workload: Option<PathBuf>,
        /// Attribute range `l:h`; unbounded if absent.
        #[arg(long)]
        range: Option<String>,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[command(flatten)]
        search: SearchFlags,
    },
    /// Recall and throughput over a workload, swept over ef and m.
    Bench {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        workload: PathBuf,
        /// Ground-truth cache; defaults to the workload path with `.gt`.
        #[arg(long)]
        ground_truth: Option<PathBuf>,
        /// Comma-separated modes.
        #[arg(long, value_delimiter = ',', default_value = "pre,post,hybrid,auto")]
        strategy: Vec<Mode>,
        #[arg(long, value_delimiter = ',', default_value = "50,100,200,400")]
        ef: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "16")]
        m: Vec<usize>,
        #[arg(long)]
        global_selection: bool,
        #[arg(long)]
        thresholds: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Tune the strategy thresholds on a sample workload.
    Calibrate {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        workload: PathBuf,
        #[arg(long, default_value_t = 0.9)]
        recall_target: f64,
        #[arg(long, default_value_t = 16)]
        m: usize,
        /// Defaults to the index path with `.thresholds`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check graph inclusivity: exact for the segmented kNN graph, measured
    /// for an index against per-range HNSW graphs.
    ValidateInclusivity {
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 8)]
        dim: usize,
        #[arg(long, default_value_t = 4)]
        segments: usize,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Also measure inclusiveness of this index.
        #[arg(long)]
        index: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,6,8")]
        spans: Vec<usize>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Build time, size and hybrid latency across dataset sizes.
    Scaling {
        #[arg(long, value_delimiter = ',', default_value = "10000,20000,40000,80000")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 16)]
        dim: usize,
        #[arg(long, default_value_t = 0.25)]
        width: f64,
        #[arg(long, default_value_t = 100)]
        queries: usize,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 200)]
        ef: usize,
        #[arg(long, default_value_t = 16)]
        m: usize,
        #[command(flatten)]
        build: BuildFlags,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn parse_range(s: &str) -> Result<(f64, f64)> {
    let (l, h) = s.split_once(':').ok_or_else(|| Error::InvalidArgument(format!("range {s:?} is not l:h")))?;
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| Error::InvalidArgument(format!("{x:?} is not a number")));
    Ok((num(l)?, num(h)?))
}

fn with_extension(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

fn write_rows<T: serde::Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData { n, dim, attr_low, attr_high, seed, vectors, attributes } => {
            let data = gen_synthetic(n, dim, attr_low, attr_high, seed)?;
            save_dataset(&data, vectors, attributes)?;
        }
        Command::GenWorkload { vectors, attributes, queries, k, width, min_width, max_width, seed, out } => {
            let data = load_dataset(vectors, attributes)?;
            let spec = match width {
                Some(w) => WidthSpec::Fixed(w),
                None => WidthSpec::LogUniform { min: min_width, max: max_width },
            };
            write_workload(out, &gen_workload(&data, queries, k, spec, seed)?)?;
        }
        Command::Build { vectors, attributes, build, out } => {
            let data = load_dataset(vectors, attributes)?;
            let start = std::time::Instant::now();
            let index = HsigIndex::build(&data, build.params())?;
            println!("built {} objects in {:.2}s ({} segments)", index.len(), start.elapsed().as_secs_f64(), index.segments());
            index.save(out)?;
        }
        Command::Insert { index, vectors, attributes, out } => {
            let mut hsig = HsigIndex::load(&index)?;
            let data = load_dataset(vectors, attributes)?;
            hsig.extend(&data)?;
            println!("index now holds {} objects", hsig.len());
            hsig.save(out.unwrap_or(index))?;
        }
        Command::Search { index, query, workload, range, k, search } => {
            let hsig = HsigIndex::load(&index)?;
            let thresholds = search.thresholds(hsig.len())?;
            let queries = match (query, workload) {
                (Some(q), _) => {
                    let vector = q
                        .split(',')
                        .map(|x| x.trim().parse::<f32>().map_err(|_| Error::InvalidArgument(format!("{x:?} is not a number"))))
                        .collect::<Result<Vec<f32>>>()?;
                    let (l, h) = range.as_deref().map(parse_range).transpose()?.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
                    vec![RangeQuery::new(vector, l, h, k)?]
                }
                (None, Some(w)) => read_workload(w)?.queries,
                (None, None) => unreachable!("clap requires one of them"),
            };
            for (i, q) in queries.iter().enumerate() {
                let (res, _, strategy) = run_query(&hsig, q, search.strategy, &search.params(), &thresholds)?;
                let hits: Vec<String> = res.iter().map(|n| format!("{}:{:.6}", n.id, n.distance)).collect();
                println!("{i}\t{strategy}\t{}", hits.join(" "));
            }
        }
        Command::Bench { index, workload, ground_truth, strategy, ef, m, global_selection, thresholds, repeats, threads, csv } => {
            let hsig = HsigIndex::load(&index)?;
            let w = read_workload(&workload)?;
            let gt = cached_ground_truth(&hsig, &w, ground_truth.unwrap_or_else(|| with_extension(&workload, ".gt")))?;
            let mut config = BenchConfig::new(match thresholds {
                Some(p) => Thresholds::load(p)?,
                None => Thresholds::defaults(hsig.len()),
            });
            config.modes = strategy;
            config.ef_sweep = ef;
            config.m_sweep = m;
            config.repeats = repeats;
            config.threads = threads;
            if global_selection {
                config.selection = NeighborSelection::Global;
            }
            let report = run_benchmark(&hsig, &w, &gt, &config)?;
            print!("{}", report.table());
            if let Some(p) = csv {
                report.write_csv(p)?;
            }
        }
        Command::Calibrate { index, workload, recall_target, m, out } => {
            let hsig = HsigIndex::load(&index)?;
            let w = read_workload(workload)?;
            let config = CalibrationConfig { recall_target, m, ..CalibrationConfig::default() };
            let t = calibrate(&hsig, &w.queries, &config)?;
            println!("tau_a = {}, tau_b = {}", t.tau_a, t.tau_b);
            t.save(out.unwrap_or_else(|| with_extension(&index, ".thresholds")))?;
        }
        Command::ValidateInclusivity { n, dim, segments, k, seed, index, spans, csv } => {
            let data = gen_synthetic(n, dim, 0.0, 10_000.0, seed)?;
            let rows = validate_sig_knng(&data, segments, k)?;
            println!("{:<20} {:>12}", "combination", "inclusivity");
            for r in &rows {
                println!("{:<20} {:>12.4}", r.combination, r.inclusivity);
            }
            let exact = rows.iter().all(|r| r.inclusivity == 1.0);
            println!("segmented kNN graph inclusive: {exact}");
            if let Some(path) = index {
                let hsig = HsigIndex::load(path)?;
                let spans: Vec<usize> = spans.into_iter().filter(|&c| c <= hsig.segments()).collect();
                let inc = measure_inclusiveness(&hsig, &spans, seed)?;
                println!("{:>8} {:>10} {:>10} {:>9} {:>9}", "segments", "ref_edges", "common", "incl_%", "control_%");
                for r in &inc {
                    println!(
                        "{:>8} {:>10} {:>10} {:>9.2} {:>9.2}",
                        r.segments, r.reference_edges, r.common_edges, r.inclusiveness, r.shuffled_control
                    );
                }
                if let Some(p) = &csv {
                    write_rows(p, &inc)?;
                }
            } else if let Some(p) = &csv {
                write_rows(p, &rows)?;
            }
            if !exact {
                return Err(Error::InvalidArgument("inclusivity violated".into()));
            }
        }
        Command::Scaling { sizes, dim, width, queries, k, ef, m, build, csv } => {
            let config = ScalingConfig {
                sizes,
                dim,
                params: build.params(),
                width,
                queries,
                k,
                search: SearchParams::new(ef, m),
                seed: build.seed,
            };
            let rows = run_scaling(&config)?;
            println!("{:>8} {:>10} {:>12} {:>12} {:>8}", "n", "build_s", "bytes", "latency_us", "recall");
            for r in &rows {
                println!("{:>8} {:>10.2} {:>12} {:>12.1} {:>8.4}", r.n, r.build_secs, r.index_bytes, r.mean_hybrid_latency_us, r.recall);
            }
            if rows.len() >= 2 {
                let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
                let b = linear_fit(&ns, &rows.iter().map(|r| r.build_secs).collect::<Vec<_>>());
                let s = linear_fit(&ns, &rows.iter().map(|r| r.index_bytes as f64).collect::<Vec<_>>());
                let l = log_fit(&ns, &rows.iter().map(|r| r.mean_hybrid_latency_us).collect::<Vec<_>>());
                println!("build time vs n: max relative residual {:.3}", b.max_relative_residual);
                println!("index size vs n: max relative residual {:.3}", s.max_relative_residual);
                println!("latency vs ln n: max relative residual {:.3}", l.max_relative_residual);
            }
            if let Some(p) = csv {
                write_rows(&p, &rows)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
