//! Build-time, size and latency growth with the dataset size.

use std::time::Instant;

use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::hsig::{HsigIndex, HsigParams, SearchParams};
use crate::oracle::recall;

use super::synth::{gen_synthetic, gen_workload, WidthSpec};

#[derive(Debug, Clone)]
pub struct ScalingConfig {
    pub sizes: Vec<usize>,
    pub dim: usize,
    pub params: HsigParams,
    /// Range width as a fraction of n.
    pub width: f64,
    pub queries: usize,
    pub k: usize,
    pub search: SearchParams,
    pub seed: u64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig {
            sizes: vec![10_000, 20_000, 40_000, 80_000],
            dim: 16,
            params: HsigParams::default(),
            width: 0.25,
            queries: 100,
            k: 10,
            search: SearchParams::new(200, 16),
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    pub build_secs: f64,
    pub index_bytes: u64,
    pub mean_hybrid_latency_us: f64,
    pub recall: f64,
}

/// Builds a fresh index per size and measures the hybrid search at a fixed
/// range width. Latency per query is the median of three runs.
pub fn run_scaling(config: &ScalingConfig) -> Result<Vec<ScalingRow>> {
    if config.sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("sizes must be strictly ascending"));
    }
    let mut rows = Vec::with_capacity(config.sizes.len());
    for &n in &config.sizes {
        let data = gen_synthetic(n, config.dim, 0.0, 10_000.0, config.seed)?;
        let start = Instant::now();
        let index = HsigIndex::build(&data, config.params.clone())?;
        let build_secs = start.elapsed().as_secs_f64();
        let workload = gen_workload(&data, config.queries, config.k, WidthSpec::Fixed(config.width), config.seed ^ n as u64)?;
        let (mut latency, mut rec) = (0.0, 0.0);
        for q in &workload.queries {
            let exact = index.search_pre(q)?;
            let mut times = [0.0; 3];
            let mut got = None;
            for t in &mut times {
                let s = Instant::now();
                got = Some(index.search_hybrid(q, &config.search)?);
                *t = s.elapsed().as_secs_f64();
            }
            times.sort_by(f64::total_cmp);
            latency += times[1];
            rec += recall(&got.expect("ran"), &exact, q.k);
        }
        let count = workload.len().max(1) as f64;
        rows.push(ScalingRow {
            n,
            build_secs,
            index_bytes: index.serialized_size(),
            mean_hybrid_latency_us: latency / count * 1e6,
            recall: rec / count,
        });
    }
    Ok(rows)
}

/// Least-squares fit `y = slope * x + intercept`, with the largest residual
/// relative to the observed value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub max_relative_residual: f64,
}

impl Fit {
    pub fn predict(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Fit {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "a fit needs two points");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let intercept = my - slope * mx;
    let max_relative_residual = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| ((slope * x + intercept) - y).abs() / y.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    Fit { slope, intercept, max_relative_residual }
}

/// Fit of `y = a * ln(x) + b`.
pub fn log_fit(xs: &[f64], ys: &[f64]) -> Fit {
    let logs: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    linear_fit(&logs, ys)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncrementRow {
    pub n_after: usize,
    pub build_secs: f64,
}

/// Grows an index over `data` in `increments` equal batches, timing each.
/// The boundaries are placed from the first batch.
pub fn build_incrementally(data: &Dataset, params: &HsigParams, increments: usize) -> Result<(HsigIndex, Vec<IncrementRow>)> {
    if increments == 0 || data.len() < increments {
        return Err(Error::invalid("need at least one object per increment"));
    }
    let step = data.len().div_ceil(increments);
    let mut rows = Vec::with_capacity(increments);
    let start = Instant::now();
    let mut index = HsigIndex::build(&data.slice(0..step), params.clone())?;
    rows.push(IncrementRow { n_after: index.len(), build_secs: start.elapsed().as_secs_f64() });
    while index.len() < data.len() {
        let batch = data.slice(index.len()..(index.len() + step).min(data.len()));
        let start = Instant::now();
        index.extend(&batch)?;
        rows.push(IncrementRow { n_after: index.len(), build_secs: start.elapsed().as_secs_f64() });
    }
    Ok((index, rows))
}
