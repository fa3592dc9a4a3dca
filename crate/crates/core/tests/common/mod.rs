#![allow(dead_code)]

use std::io::Write;
use std::sync::{Mutex, MutexGuard, OnceLock};

use unify::harness::synth::gen_synthetic;
use unify::{Dataset, HsigIndex, HsigParams};

/// Timing-sensitive tests hold this so they never overlap.
pub fn serial() -> MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

/// Writes straight to the process stdout so the line survives output capture.
pub fn report(criterion: u32, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {criterion:>2}: {verdict}  {detail}");
    let _ = out.flush();
}

/// Desk-scale profile: 10k objects, d = 16, S = 8, M = 16, efCons = 200.
pub fn desk_index() -> &'static (Dataset, HsigIndex) {
    static CELL: OnceLock<(Dataset, HsigIndex)> = OnceLock::new();
    CELL.get_or_init(|| {
        let data = gen_synthetic(10_000, 16, 0.0, 10_000.0, 42).unwrap();
        let index = HsigIndex::build(&data, HsigParams::default()).unwrap();
        (data, index)
    })
}

/// Exact range kNN by a plain double loop over f64 distances.
pub fn exact_ids(data: &Dataset, q: &[f32], low: f64, high: f64, k: usize) -> Vec<u32> {
    let mut hits: Vec<(f64, u32)> = (0..data.len() as u32)
        .filter(|&i| (low..=high).contains(&data.attribute(i)))
        .map(|i| {
            let d: f64 = data.vector(i).iter().zip(q).map(|(a, b)| ((a - b) as f64).powi(2)).sum();
            (d, i)
        })
        .collect();
    hits.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    hits.truncate(k);
    hits.into_iter().map(|(_, i)| i).collect()
}

pub fn mean(v: impl IntoIterator<Item = f64>) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for x in v {
        s += x;
        n += 1;
    }
    if n == 0 { 0.0 } else { s / n as f64 }
}
