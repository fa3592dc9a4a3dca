//! Per-query choice between pre-, post- and hybrid filtering.
//!
//! The choice depends only on the exact number of in-range objects `Y`:
//! pre-filtering when `Y <= tau_a`, post-filtering when `Y >= tau_b`,
//! hybrid filtering otherwise.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use log::{info, warn};

use crate::dataset::{RangeQuery, ResultSet};
use crate::error::{Error, Result};
use crate::hsig::{HsigIndex, SearchParams};
use crate::oracle::recall;

/// Sorted attribute multiset answering exact range counts.
///
/// New values go to a small sorted side buffer that is merged into the main
/// array once it outgrows `sqrt(n)`, so inserts cost `O(sqrt(n))` amortized
/// and counts stay `O(log n)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CardinalityView {
    main: Vec<f64>,
    delta: Vec<f64>,
}

impl CardinalityView {
    pub fn from_values(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        CardinalityView { main: values, delta: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.main.len() + self.delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn insert(&mut self, value: f64) {
        let pos = self.delta.partition_point(|&x| x < value);
        self.delta.insert(pos, value);
        if self.delta.len() * self.delta.len() > self.main.len().max(64) {
            let mut merged = Vec::with_capacity(self.len());
            let (mut i, mut j) = (0, 0);
            while i < self.main.len() && j < self.delta.len() {
                if self.main[i] <= self.delta[j] {
                    merged.push(self.main[i]);
                    i += 1;
                } else {
                    merged.push(self.delta[j]);
                    j += 1;
                }
            }
            merged.extend_from_slice(&self.main[i..]);
            merged.extend_from_slice(&self.delta[j..]);
            self.main = merged;
            self.delta.clear();
        }
    }

    /// Number of values in `[low, high]`.
    pub fn count(&self, low: f64, high: f64) -> usize {
        if low > high {
            return 0;
        }
        let span = |v: &[f64]| v.partition_point(|&x| x <= high) - v.partition_point(|&x| x < low);
        span(&self.main) + span(&self.delta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    Pre,
    Post,
    Hybrid,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Pre, Strategy::Post, Strategy::Hybrid];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Pre => "pre",
            Strategy::Post => "post",
            Strategy::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pre" => Ok(Strategy::Pre),
            "post" => Ok(Strategy::Post),
            "hybrid" => Ok(Strategy::Hybrid),
            _ => Err(Error::invalid(format!("unknown strategy {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Thresholds {
    pub tau_a: u64,
    pub tau_b: u64,
    /// Recall the thresholds were tuned for.
    pub recall_target: f64,
    /// Unix seconds of the calibration run; `None` for defaults.
    pub calibrated_at: Option<u64>,
}

impl Thresholds {
    /// 1% and 50% of the dataset size.
    pub fn defaults(n: usize) -> Self {
        Thresholds {
            tau_a: n as u64 / 100,
            tau_b: n as u64 / 2,
            recall_target: 0.9,
            calibrated_at: None,
        }
    }

    pub fn select(&self, cardinality: usize) -> Strategy {
        let y = cardinality as u64;
        if y <= self.tau_a {
            Strategy::Pre
        } else if y >= self.tau_b {
            Strategy::Post
        } else {
            Strategy::Hybrid
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut s = format!(
            "tau_a {}\ntau_b {}\nrecall_target {}\n",
            self.tau_a, self.tau_b, self.recall_target
        );
        if let Some(t) = self.calibrated_at {
            s.push_str(&format!("calibrated_at {t}\n"));
        }
        fs::write(path, s)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut t = Thresholds::defaults(0);
        let (mut a, mut b) = (None, None);
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (key, value) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| Error::invalid(format!("malformed threshold line {line:?}")))?;
            let bad = |_| Error::invalid(format!("bad value in {line:?}"));
            match key {
                "tau_a" => a = Some(value.trim().parse().map_err(bad)?),
                "tau_b" => b = Some(value.trim().parse().map_err(bad)?),
                "recall_target" => t.recall_target = value.trim().parse().map_err(|_| Error::invalid(format!("bad value in {line:?}")))?,
                "calibrated_at" => t.calibrated_at = Some(value.trim().parse().map_err(bad)?),
                _ => return Err(Error::invalid(format!("unknown threshold key {key:?}"))),
            }
        }
        t.tau_a = a.ok_or_else(|| Error::invalid("missing tau_a"))?;
        t.tau_b = b.ok_or_else(|| Error::invalid("missing tau_b"))?;
        Ok(t)
    }
}

/// Strategy for a query on `index` and the range cardinality it is based on.
pub fn select_strategy(index: &HsigIndex, query: &RangeQuery, thresholds: &Thresholds) -> (Strategy, usize) {
    let y = index.cardinality(query.low, query.high);
    (thresholds.select(y), y)
}

/// Runs one strategy. `params.ef` is the beam width for post- and hybrid
/// filtering; pre-filtering ignores it.
pub fn search_with(index: &HsigIndex, query: &RangeQuery, strategy: Strategy, params: &SearchParams) -> Result<ResultSet> {
    match strategy {
        Strategy::Pre => index.search_pre(query),
        Strategy::Post => index.search_post(query, params.ef),
        Strategy::Hybrid => index.search_hybrid(query, params),
    }
}

/// Selects a strategy and runs it.
pub fn search_auto(
    index: &HsigIndex,
    query: &RangeQuery,
    thresholds: &Thresholds,
    params: &SearchParams,
) -> Result<(ResultSet, Strategy)> {
    let (strategy, _) = select_strategy(index, query, thresholds);
    Ok((search_with(index, query, strategy, params)?, strategy))
}

/// Settings for [`calibrate`].
#[derive(Debug, Clone)]
pub struct CalibrationConfig {
    pub recall_target: f64,
    pub ef_sweep: Vec<usize>,
    pub m: usize,
    /// Number of log-spaced cardinality buckets.
    pub buckets: usize,
    /// Timed repeats per query; the median is kept.
    pub repeats: usize,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            recall_target: 0.9,
            ef_sweep: vec![16, 32, 64, 128, 256],
            m: 16,
            buckets: 16,
            repeats: 3,
        }
    }
}

fn bucket_of(y: usize, n: usize, buckets: usize) -> usize {
    let b = (buckets as f64 * (1.0 + y as f64).ln() / (1.0 + n as f64).ln()).floor() as usize;
    b.min(buckets - 1)
}

/// Smallest cardinality falling in `bucket`.
fn bucket_start(bucket: usize, n: usize, buckets: usize) -> u64 {
    let mut y = ((1.0 + n as f64).ln() * bucket as f64 / buckets as f64).exp_m1().ceil().max(0.0) as usize;
    while y > 0 && bucket_of(y - 1, n, buckets) >= bucket {
        y -= 1;
    }
    while bucket_of(y, n, buckets) < bucket {
        y += 1;
    }
    y as u64
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn timed<T>(repeats: usize, mut f: impl FnMut() -> Result<T>) -> Result<(T, f64)> {
    let mut times = Vec::with_capacity(repeats);
    let mut out = None;
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        out = Some(f()?);
        times.push(start.elapsed().as_secs_f64());
    }
    Ok((out.expect("at least one repeat"), median(&mut times)))
}

/// Per-bucket cost (median seconds per query) of one strategy, or infinity
/// when no swept setting reaches the recall target.
fn strategy_costs(
    index: &HsigIndex,
    queries: &[(usize, &RangeQuery, ResultSet)],
    strategy: Strategy,
    sweep: &[usize],
    config: &CalibrationConfig,
) -> Result<Vec<f64>> {
    let b = config.buckets;
    let mut best = vec![f64::INFINITY; b];
    for &ef in sweep {
        let params = SearchParams::new(ef, config.m);
        let mut recalls = vec![Vec::new(); b];
        let mut times = vec![Vec::new(); b];
        for (bucket, q, exact) in queries {
            let (res, t) = timed(config.repeats, || search_with(index, q, strategy, &params))?;
            recalls[*bucket].push(recall(&res, exact, q.k));
            times[*bucket].push(t);
        }
        for i in 0..b {
            if recalls[i].is_empty() {
                continue;
            }
            let mean = recalls[i].iter().sum::<f64>() / recalls[i].len() as f64;
            if mean >= config.recall_target {
                best[i] = best[i].min(median(&mut times[i]));
            }
        }
        if strategy == Strategy::Pre {
            break;
        }
    }
    Ok(best)
}

/// Tunes `tau_a` and `tau_b` on a sample workload.
///
/// Queries are grouped into log-spaced cardinality buckets. Each strategy's
/// cost in a bucket is its fastest median latency among the swept beam
/// widths that meet the recall target. The thresholds are the split of the
/// buckets into a pre, hybrid and post run with the least total cost.
pub fn calibrate(index: &HsigIndex, workload: &[RangeQuery], config: &CalibrationConfig) -> Result<Thresholds> {
    let n = index.len();
    if workload.is_empty() || n == 0 {
        warn!("calibration has no samples; keeping default thresholds");
        return Ok(Thresholds::defaults(n));
    }
    let b = config.buckets.max(1);
    let config = CalibrationConfig { buckets: b, ..config.clone() };
    let mut queries = Vec::with_capacity(workload.len());
    let mut counts = vec![0usize; b];
    for q in workload {
        let y = index.cardinality(q.low, q.high);
        let bucket = bucket_of(y, n, b);
        counts[bucket] += 1;
        queries.push((bucket, q, index.search_pre(q)?));
    }

    let pre = strategy_costs(index, &queries, Strategy::Pre, &[0], &config)?;
    let mut hybrid = strategy_costs(index, &queries, Strategy::Hybrid, &config.ef_sweep, &config)?;
    let mut post = strategy_costs(index, &queries, Strategy::Post, &config.ef_sweep, &config)?;
    let failing = (0..b).any(|i| counts[i] > 0 && hybrid[i].is_infinite() && post[i].is_infinite());
    if failing {
        let wide: Vec<usize> = config.ef_sweep.iter().map(|&ef| ef * 4).collect();
        info!("widening the beam sweep to {wide:?}");
        let h2 = strategy_costs(index, &queries, Strategy::Hybrid, &wide, &config)?;
        let p2 = strategy_costs(index, &queries, Strategy::Post, &wide, &config)?;
        for i in 0..b {
            hybrid[i] = hybrid[i].min(h2[i]);
            post[i] = post[i].min(p2[i]);
        }
    }

    let weighted = |costs: &[f64], i: usize| if counts[i] == 0 { 0.0 } else { costs[i] * counts[i] as f64 };
    let mut best = (f64::INFINITY, b, b);
    for a in 0..=b {
        for c in a..=b {
            let total: f64 = (0..b)
                .map(|i| match i {
                    _ if i < a => weighted(&pre, i),
                    _ if i < c => weighted(&hybrid, i),
                    _ => weighted(&post, i),
                })
                .sum();
            if total < best.0 {
                best = (total, a, c);
            }
        }
    }
    let (_, a, c) = best;
    let tau_a = match a {
        0 => 0,
        _ if a == b => n as u64,
        _ => bucket_start(a, n, b).saturating_sub(1),
    };
    let tau_b = if c == b { n as u64 + 1 } else { bucket_start(c, n, b) };
    let calibrated_at = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).ok();
    info!("calibrated tau_a = {tau_a}, tau_b = {tau_b}");
    Ok(Thresholds {
        tau_a,
        tau_b: tau_b.max(tau_a + 1),
        recall_target: config.recall_target,
        calibrated_at,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use super::Strategy;

    #[test]
    fn default_thresholds_route_by_cardinality() {
        let t = Thresholds::defaults(10_000);
        assert_eq!((t.tau_a, t.tau_b), (100, 5_000));
        assert_eq!(t.select(0), Strategy::Pre);
        assert_eq!(t.select(100), Strategy::Pre);
        assert_eq!(t.select(101), Strategy::Hybrid);
        assert_eq!(t.select(4_999), Strategy::Hybrid);
        assert_eq!(t.select(5_000), Strategy::Post);
        assert_eq!(t.select(10_000), Strategy::Post);
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("auto".parse::<Strategy>().is_err());
    }

    #[test]
    fn sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.txt");
        let t = Thresholds { tau_a: 7, tau_b: 90, recall_target: 0.95, calibrated_at: Some(1_700_000_000) };
        t.save(&path).unwrap();
        assert_eq!(Thresholds::load(&path).unwrap(), t);
        fs::write(&path, "tau_a 3\n").unwrap();
        assert!(Thresholds::load(&path).is_err());
    }

    #[test]
    fn buckets_are_monotone_and_cover_zero_to_n() {
        let n = 10_000;
        assert_eq!(bucket_of(0, n, 16), 0);
        assert_eq!(bucket_of(n, n, 16), 15);
        let mut prev = 0;
        for y in 0..=n {
            let b = bucket_of(y, n, 16);
            assert!(b >= prev);
            prev = b;
        }
        for b in 1..16 {
            let s = bucket_start(b, n, 16) as usize;
            assert_eq!(bucket_of(s, n, 16), b);
            assert!(bucket_of(s - 1, n, 16) < b);
        }
    }

    proptest! {
        #[test]
        fn view_count_matches_scan(values in proptest::collection::vec(-100.0f64..100.0, 0..300), l in -120.0f64..120.0, w in 0.0f64..100.0) {
            let mut v = CardinalityView::default();
            for &x in &values {
                v.insert(x);
            }
            let h = l + w;
            let want = values.iter().filter(|&&x| l <= x && x <= h).count();
            prop_assert_eq!(v.count(l, h), want);
            prop_assert_eq!(v.len(), values.len());
            prop_assert_eq!(CardinalityView::from_values(values.clone()).count(l, h), want);
        }

        #[test]
        fn selection_is_monotone(a in 0u64..1000, gap in 1u64..1000, y1 in 0usize..3000, y2 in 0usize..3000) {
            let t = Thresholds { tau_a: a, tau_b: a + gap, recall_target: 0.9, calibrated_at: None };
            let (lo, hi) = (y1.min(y2), y1.max(y2));
            let rank = |s| match s {
                Strategy::Pre => 0,
                Strategy::Hybrid => 1,
                Strategy::Post => 2,
            };
            prop_assert!(rank(t.select(lo)) <= rank(t.select(hi)));
        }
    }
}
