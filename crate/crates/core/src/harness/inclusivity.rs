//! How much of a per-range HNSW the unified index already contains.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::hnsw::{HnswIndex, HnswParams};
use crate::hsig::HsigIndex;
use crate::segmentation::SegmentBoundaries;
use crate::sig_knng::{all_combinations, build_sig_knng, check_inclusivity, inclusiveness};

/// Directed edges of all chunks at one layer.
pub fn chunk_union_edges(index: &HsigIndex, layer: usize) -> HashSet<(u32, u32)> {
    let mut edges = HashSet::new();
    for id in 0..index.len() as u32 {
        if let Some(node) = index.node(id, layer) {
            edges.extend(node.slots().iter().map(|s| (id, s.id)));
        }
    }
    edges
}

/// HNSW over the objects of `segments`, inserted in id order with the levels
/// the unified index drew for them.
pub fn reference_hnsw(index: &HsigIndex, segments: std::ops::Range<usize>) -> Result<HnswIndex> {
    let p = index.params();
    let mut hnsw = HnswIndex::new(
        index.dim(),
        HnswParams {
            max_degree: p.max_degree,
            ef_construction: p.ef_construction,
            level_mult: p.level_mult,
            seed: p.seed,
        },
    )?;
    for id in 0..index.len() as u32 {
        if segments.contains(&index.segment_of(id)) {
            hnsw.insert_with_level(id, index.dataset().vector(id), index.level(id))?;
        }
    }
    Ok(hnsw)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InclusivenessRow {
    /// Number of contiguous segments, starting from the first.
    pub segments: usize,
    pub reference_edges: usize,
    pub common_edges: usize,
    /// Percentage of reference edges present in the index.
    pub inclusiveness: f64,
    /// Same measure against the reference with shuffled edge targets.
    pub shuffled_control: f64,
}

/// Bottom-layer inclusiveness against references over the first `c`
/// segments, for each `c` in `spans`.
pub fn measure_inclusiveness(index: &HsigIndex, spans: &[usize], seed: u64) -> Result<Vec<InclusivenessRow>> {
    let candidate = chunk_union_edges(index, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(spans.len());
    for &c in spans {
        if c == 0 || c > index.segments() {
            return Err(Error::invalid(format!("span {c} outside 1..={}", index.segments())));
        }
        let hnsw = reference_hnsw(index, 0..c)?;
        let reference: HashSet<(u32, u32)> = hnsw.labeled_edges(0).into_iter().collect();
        let members: Vec<u32> = (0..index.len() as u32).filter(|&i| index.segment_of(i) < c).collect();
        let shuffled: HashSet<(u32, u32)> = reference
            .iter()
            .map(|&(u, _)| loop {
                let t = members[rng.random_range(0..members.len())];
                if t != u || members.len() == 1 {
                    break (u, t);
                }
            })
            .collect();
        rows.push(InclusivenessRow {
            segments: c,
            reference_edges: reference.len(),
            common_edges: reference.intersection(&candidate).count(),
            inclusiveness: inclusiveness(&candidate, &reference),
            shuffled_control: inclusiveness(&candidate, &shuffled),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CombinationRow {
    pub combination: String,
    pub inclusivity: f64,
}

/// Checks the segmented kNN graph against a fresh kNN graph for every
/// non-empty segment combination.
pub fn validate_sig_knng(dataset: &Dataset, segments: usize, k: usize) -> Result<Vec<CombinationRow>> {
    let boundaries = SegmentBoundaries::build(dataset.attributes(), segments)?;
    let sig = build_sig_knng(dataset, &boundaries, k);
    all_combinations(boundaries.len())
        .into_iter()
        .map(|combo| {
            let score = check_inclusivity(&sig, dataset, &boundaries, k, &combo)?;
            let name: Vec<String> = combo.iter().map(usize::to_string).collect();
            Ok(CombinationRow { combination: name.join("+"), inclusivity: score })
        })
        .collect()
}
