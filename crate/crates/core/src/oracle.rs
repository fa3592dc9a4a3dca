//! Exact range-filtered kNN and the recall metric.

use std::collections::{BinaryHeap, HashSet};

use crate::dataset::{Dataset, RangeQuery, ResultSet};
use crate::distance::{squared_l2, Scored};
use crate::error::Result;

/// Exact k nearest neighbors of `query.vector` among objects whose attribute
/// lies in `[query.low, query.high]`. Returns every qualifying object when
/// fewer than `k` qualify.
pub fn brute_force_rfnns(dataset: &Dataset, query: &RangeQuery) -> Result<ResultSet> {
    query.check_dim(dataset.dim())?;
    let mut heap: BinaryHeap<Scored> = BinaryHeap::with_capacity(query.k + 1);
    for id in 0..dataset.len() as u32 {
        if !query.contains(dataset.attribute(id)) {
            continue;
        }
        let s = Scored::new(id, squared_l2(&query.vector, dataset.vector(id)));
        if heap.len() < query.k {
            heap.push(s);
        } else if s < *heap.peek().expect("heap is full") {
            heap.pop();
            heap.push(s);
        }
    }
    Ok(ResultSet::from_scored(heap.into_vec(), query.k))
}

/// `|approx ∩ exact| / min(k, |exact|)`, intersecting by id.
///
/// `exact` must be the oracle answer for the same query, so `|exact| < k`
/// means the range held fewer than `k` objects. An empty range yields 1.0.
pub fn recall(approx: &ResultSet, exact: &ResultSet, k: usize) -> f64 {
    let denom = k.min(exact.len());
    if denom == 0 {
        return 1.0;
    }
    let truth: HashSet<u32> = exact.iter().map(|n| n.id).collect();
    let found: HashSet<u32> = approx.iter().map(|n| n.id).filter(|id| truth.contains(id)).collect();
    found.len().min(denom) as f64 / denom as f64
}
