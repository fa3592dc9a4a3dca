//! Recall and throughput measurement over a workload.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use log::info;
use serde::Serialize;

use crate::dataset::{RangeQuery, ResultSet};
use crate::error::{Error, Result};
use crate::hnsw::SearchStats;
use crate::hsig::{HsigIndex, NeighborSelection, SearchParams};
use crate::oracle::recall;
use crate::selector::{select_strategy, Strategy, Thresholds};

use super::io::{read_ground_truth, write_ground_truth};
use super::synth::Workload;

/// A fixed strategy, or per-query selection by cardinality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Fixed(Strategy),
    Auto,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Fixed(s) => s.fmt(f),
            Mode::Auto => f.write_str("auto"),
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            Ok(Mode::Auto)
        } else {
            s.parse().map(Mode::Fixed)
        }
    }
}

/// Runs one query, returning the answer, its counters and the strategy used.
pub fn run_query(
    index: &HsigIndex,
    query: &RangeQuery,
    mode: Mode,
    params: &SearchParams,
    thresholds: &Thresholds,
) -> Result<(ResultSet, SearchStats, Strategy)> {
    let strategy = match mode {
        Mode::Fixed(s) => s,
        Mode::Auto => select_strategy(index, query, thresholds).0,
    };
    let (r, stats) = match strategy {
        Strategy::Pre => index.search_pre_with_stats(query)?,
        Strategy::Post => index.search_post_with_stats(query, params.ef)?,
        Strategy::Hybrid => index.search_hybrid_with_stats(query, params)?,
    };
    Ok((r, stats, strategy))
}

/// Exact answers for every query of a workload.
pub fn ground_truth(index: &HsigIndex, workload: &Workload) -> Result<Vec<ResultSet>> {
    workload.queries.iter().map(|q| index.search_pre(q)).collect()
}

/// Reads cached exact answers from `path`, computing and writing them first
/// when the file is missing or does not match the workload.
pub fn cached_ground_truth(index: &HsigIndex, workload: &Workload, path: impl AsRef<Path>) -> Result<Vec<ResultSet>> {
    let path = path.as_ref();
    if path.exists() {
        if let Ok(gt) = read_ground_truth(path) {
            if gt.len() == workload.len() {
                return Ok(gt);
            }
        }
    }
    info!("computing ground truth for {} queries", workload.len());
    let gt = ground_truth(index, workload)?;
    write_ground_truth(path, &gt)?;
    Ok(gt)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryRecord {
    pub strategy: Strategy,
    pub cardinality: usize,
    /// Median seconds over the repeats.
    pub latency: f64,
    pub recall: f64,
    pub distance_evals: u64,
}

/// Times every query `repeats` times and keeps the median.
pub fn measure(
    index: &HsigIndex,
    queries: &[RangeQuery],
    truth: &[ResultSet],
    mode: Mode,
    params: &SearchParams,
    thresholds: &Thresholds,
    repeats: usize,
) -> Result<Vec<QueryRecord>> {
    if queries.len() != truth.len() {
        return Err(Error::invalid("one ground-truth answer per query is required"));
    }
    let mut out = Vec::with_capacity(queries.len());
    let mut times = Vec::with_capacity(repeats.max(1));
    for (q, exact) in queries.iter().zip(truth) {
        times.clear();
        let mut last = None;
        for _ in 0..repeats.max(1) {
            let start = Instant::now();
            let res = run_query(index, q, mode, params, thresholds)?;
            times.push(start.elapsed().as_secs_f64());
            last = Some(res);
        }
        times.sort_by(f64::total_cmp);
        let (res, stats, strategy) = last.expect("at least one repeat");
        out.push(QueryRecord {
            strategy,
            cardinality: index.cardinality(q.low, q.high),
            latency: times[times.len() / 2],
            recall: recall(&res, exact, q.k),
            distance_evals: stats.distance_evals,
        });
    }
    Ok(out)
}

/// Queries per second with the workload split across `threads` workers.
pub fn sharded_qps(
    index: &HsigIndex,
    queries: &[RangeQuery],
    mode: Mode,
    params: &SearchParams,
    thresholds: &Thresholds,
    threads: usize,
) -> Result<f64> {
    let threads = threads.max(1);
    let chunk = queries.len().div_ceil(threads).max(1);
    let start = Instant::now();
    std::thread::scope(|s| {
        let handles: Vec<_> = queries
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .try_for_each(|q| run_query(index, q, mode, params, thresholds).map(|_| ()))
                })
            })
            .collect();
        handles.into_iter().try_for_each(|h| h.join().expect("worker panicked"))
    })?;
    Ok(queries.len() as f64 / start.elapsed().as_secs_f64())
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub modes: Vec<Mode>,
    pub ef_sweep: Vec<usize>,
    pub m_sweep: Vec<usize>,
    pub selection: NeighborSelection,
    pub thresholds: Thresholds,
    pub repeats: usize,
    /// Workers for the sharded throughput column; 1 disables it.
    pub threads: usize,
}

impl BenchConfig {
    pub fn new(thresholds: Thresholds) -> Self {
        BenchConfig {
            modes: vec![Mode::Fixed(Strategy::Pre), Mode::Fixed(Strategy::Post), Mode::Fixed(Strategy::Hybrid), Mode::Auto],
            ef_sweep: vec![50, 100, 200, 400],
            m_sweep: vec![16],
            selection: NeighborSelection::default(),
            thresholds,
            repeats: 1,
            threads: 1,
        }
    }
}

/// One CSV row: a mode at one (ef, m) setting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub mode: String,
    pub ef: usize,
    pub m: usize,
    pub queries: usize,
    pub mean_recall: f64,
    pub median_recall: f64,
    pub qps: f64,
    pub qps_sharded: Option<f64>,
    pub threads: usize,
    pub mean_latency_us: f64,
    pub median_latency_us: f64,
    pub mean_distance_evals: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Per-query records, aligned with `rows`.
    pub records: Vec<Vec<QueryRecord>>,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Sweeps every mode over the `ef` x `m` grid (pre-filtering runs once).
pub fn run_benchmark(index: &HsigIndex, workload: &Workload, truth: &[ResultSet], config: &BenchConfig) -> Result<BenchReport> {
    let mut rows = Vec::new();
    let mut records = Vec::new();
    let count = workload.len().max(1) as f64;
    for &mode in &config.modes {
        for &ef in &config.ef_sweep {
            for &m in &config.m_sweep {
                let params = SearchParams { ef, m, selection: config.selection };
                let recs = measure(index, &workload.queries, truth, mode, &params, &config.thresholds, config.repeats)?;
                let total: f64 = recs.iter().map(|r| r.latency).sum();
                let qps_sharded = if config.threads > 1 {
                    Some(sharded_qps(index, &workload.queries, mode, &params, &config.thresholds, config.threads)?)
                } else {
                    None
                };
                rows.push(BenchRow {
                    mode: mode.to_string(),
                    ef,
                    m,
                    queries: recs.len(),
                    mean_recall: recs.iter().map(|r| r.recall).sum::<f64>() / count,
                    median_recall: median(recs.iter().map(|r| r.recall).collect()),
                    qps: if total > 0.0 { recs.len() as f64 / total } else { f64::INFINITY },
                    qps_sharded,
                    threads: config.threads,
                    mean_latency_us: total / count * 1e6,
                    median_latency_us: median(recs.iter().map(|r| r.latency).collect()) * 1e6,
                    mean_distance_evals: recs.iter().map(|r| r.distance_evals as f64).sum::<f64>() / count,
                    seed: workload.seed,
                });
                records.push(recs);
                if mode == Mode::Fixed(Strategy::Pre) {
                    break;
                }
            }
            if mode == Mode::Fixed(Strategy::Pre) {
                break;
            }
        }
    }
    Ok(BenchReport { rows, records })
}

impl BenchReport {
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::invalid(e.to_string()))?;
        for row in &self.rows {
            w.serialize(row).map_err(|e| Error::invalid(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn table(&self) -> String {
        let mut s = format!(
            "{:<7} {:>5} {:>4} {:>8} {:>10} {:>12} {:>10}\n",
            "mode", "ef", "m", "recall", "qps", "latency_us", "dist_evals"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<7} {:>5} {:>4} {:>8.4} {:>10.1} {:>12.1} {:>10.1}",
                r.mode, r.ef, r.m, r.mean_recall, r.qps, r.mean_latency_us, r.mean_distance_evals
            );
        }
        s
    }
}
