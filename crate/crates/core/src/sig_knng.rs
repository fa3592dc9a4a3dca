//! Brute-force kNN graph and segmented kNN graph (SIG-kNNG), plus the
//! inclusivity checks built on them.
//!
//! Everything here is exhaustive by design and meant for small instances: it
//! is the reference the graph index is measured against.

use std::collections::HashSet;

use log::warn;

use crate::dataset::Dataset;
use crate::distance::{squared_l2, Scored};
use crate::error::{Error, Result};
use crate::segmentation::SegmentBoundaries;

/// Directed graph as adjacency lists indexed by node id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    adjacency: Vec<Vec<u32>>,
}

impl DirectedGraph {
    pub fn new(adjacency: Vec<Vec<u32>>) -> Self {
        DirectedGraph { adjacency }
    }

    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.adjacency[v as usize]
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(v, list)| list.iter().map(move |&o| (v as u32, o)))
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    pub fn edge_set(&self) -> HashSet<(u32, u32)> {
        self.edges().collect()
    }
}

/// Exact `k` nearest neighbors of `v` among `pool` (excluding `v`), nearest
/// first, ties by id.
pub fn knn_among(dataset: &Dataset, v: u32, pool: impl IntoIterator<Item = u32>, k: usize) -> Vec<u32> {
    let x = dataset.vector(v);
    let mut scored: Vec<Scored> = pool
        .into_iter()
        .filter(|&o| o != v)
        .map(|o| Scored::new(o, squared_l2(x, dataset.vector(o))))
        .collect();
    scored.sort_unstable();
    scored.truncate(k);
    scored.into_iter().map(|s| s.id).collect()
}

/// kNN graph: an edge `(v, o)` for each `o` in `kNN(v, D \ {v})`.
pub fn build_knng(dataset: &Dataset, k: usize) -> Result<DirectedGraph> {
    let n = dataset.len();
    if k >= n {
        return Err(Error::invalid(format!("k = {k} must be below n = {n}")));
    }
    Ok(DirectedGraph::new(
        (0..n as u32).map(|v| knn_among(dataset, v, 0..n as u32, k)).collect(),
    ))
}

/// kNN graph over the subset `members` of the dataset (ids stay global).
pub fn build_knng_over(dataset: &Dataset, members: &[u32], k: usize) -> DirectedGraph {
    let mut adjacency = vec![Vec::new(); dataset.len()];
    for &v in members {
        adjacency[v as usize] = knn_among(dataset, v, members.iter().copied(), k);
    }
    DirectedGraph::new(adjacency)
}

/// Segmented kNN graph: node `v` keeps one chunk per segment, chunk `i`
/// holding `kNN(v, D_i \ {v})` sorted by distance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SigKnng {
    chunks: Vec<Vec<Vec<u32>>>,
}

impl SigKnng {
    pub fn segments(&self) -> usize {
        self.chunks.first().map_or(0, Vec::len)
    }

    pub fn chunk(&self, v: u32, segment: usize) -> &[u32] {
        &self.chunks[v as usize][segment]
    }

    pub fn chunk_mut(&mut self, v: u32, segment: usize) -> &mut Vec<u32> {
        &mut self.chunks[v as usize][segment]
    }

    /// The union of all chunks as a plain directed graph.
    pub fn flatten(&self) -> DirectedGraph {
        DirectedGraph::new(self.chunks.iter().map(|c| c.concat()).collect())
    }

    pub fn edge_count(&self) -> usize {
        self.chunks.iter().flatten().map(Vec::len).sum()
    }
}

/// Object ids of each segment.
pub fn segment_members(dataset: &Dataset, boundaries: &SegmentBoundaries) -> Vec<Vec<u32>> {
    let mut members = vec![Vec::new(); boundaries.len()];
    for id in 0..dataset.len() as u32 {
        members[boundaries.segment_of(dataset.attribute(id))].push(id);
    }
    members
}

/// Builds the segmented kNN graph by brute force within each segment. A
/// segment with at most `k` objects contributes all of them (minus `v`), with
/// a warning.
pub fn build_sig_knng(dataset: &Dataset, boundaries: &SegmentBoundaries, k: usize) -> SigKnng {
    let members = segment_members(dataset, boundaries);
    for (i, m) in members.iter().enumerate() {
        if m.len() <= k {
            warn!("segment {i} holds {} objects, fewer than k + 1 = {}", m.len(), k + 1);
        }
    }
    let chunks = (0..dataset.len() as u32)
        .map(|v| {
            members
                .iter()
                .map(|seg| knn_among(dataset, v, seg.iter().copied(), k))
                .collect()
        })
        .collect();
    SigKnng { chunks }
}

/// Fraction of the edges of the exact kNN graph over the union of
/// `combination` that are also present in `sig`. Inclusivity demands 1.0.
pub fn check_inclusivity(
    sig: &SigKnng,
    dataset: &Dataset,
    boundaries: &SegmentBoundaries,
    k: usize,
    combination: &[usize],
) -> Result<f64> {
    if combination.is_empty() {
        return Err(Error::invalid("segment combination is empty"));
    }
    let members = segment_members(dataset, boundaries);
    let mut union: Vec<u32> = Vec::new();
    for &seg in combination {
        let m = members
            .get(seg)
            .ok_or_else(|| Error::invalid(format!("segment {seg} out of range")))?;
        union.extend_from_slice(m);
    }
    union.sort_unstable();
    union.dedup();
    let reference = build_knng_over(dataset, &union, k);
    let total = reference.edge_count();
    if total == 0 {
        return Ok(1.0);
    }
    let present = reference
        .edges()
        .filter(|&(v, o)| {
            let seg = boundaries.segment_of(dataset.attribute(o));
            sig.chunk(v, seg).contains(&o)
        })
        .count();
    Ok(present as f64 / total as f64)
}

/// Percentage of `reference` edges that also appear in `candidate`
/// (directed, by `(source, target)`).
pub fn inclusiveness(candidate: &HashSet<(u32, u32)>, reference: &HashSet<(u32, u32)>) -> f64 {
    if reference.is_empty() {
        return 100.0;
    }
    let common = reference.iter().filter(|e| candidate.contains(e)).count();
    100.0 * common as f64 / reference.len() as f64
}

/// Every non-empty subset of `0..segments`, in increasing bitmask order.
pub fn all_combinations(segments: usize) -> Vec<Vec<usize>> {
    (1u64..(1u64 << segments))
        .map(|mask| (0..segments).filter(|i| mask >> i & 1 == 1).collect())
        .collect()
}
