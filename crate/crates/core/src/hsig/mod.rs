//! Hierarchical segmented inclusive graph.
//!
//! Each node stores, per layer it occupies:
//!
//! - `S` adjacency chunks; chunk `j` holds the node's HNSW neighbors inside
//!   segment `j`, sorted by distance, so the chunk-`j` edges of all nodes in
//!   segment `j` form an HNSW over that segment;
//! - a skip-list successor in `(attribute, id)` order;
//! - a bitmap over the concatenated chunk slots marking at most `M` global
//!   edges, which together form an HNSW-like graph over the whole dataset.
//!
//! Construction is incremental; see [`HsigIndex::insert`].

mod check;
mod io;
mod search;

use std::cmp::Ordering;
use std::ops::Range;

use bitvec::prelude::*;
use log::debug;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{AttributedVector, Dataset};
use crate::distance::{squared_l2, Scored};
use crate::error::{Error, Result};
use crate::hnsw::{self, default_level_mult, layer_cap, prune, search_layer, Neighborhood};
use crate::segmentation::SegmentBoundaries;
use crate::selector::CardinalityView;

pub use crate::hnsw::SearchStats;
pub use search::{NeighborSelection, SearchParams};

/// Levels above this are clamped; reaching it needs a uniform draw below
/// `exp(-63 / m_L)`.
const MAX_LEVEL: usize = 63;

#[derive(Debug, Clone, PartialEq)]
pub struct HsigParams {
    /// S: requested segment count (duplicated attributes may lower it).
    pub segments: usize,
    /// M: per-chunk degree of new nodes, and the global-edge budget.
    pub max_degree: usize,
    pub ef_construction: usize,
    /// m_L in the level draw.
    pub level_mult: f64,
    pub seed: u64,
    /// Largest attribute sample used to place segment boundaries.
    pub sample_cap: usize,
}

impl Default for HsigParams {
    fn default() -> Self {
        HsigParams {
            segments: 8,
            max_degree: 16,
            ef_construction: 200,
            level_mult: default_level_mult(16),
            seed: 42,
            sample_cap: 100_000,
        }
    }
}

impl HsigParams {
    fn validate(&self) -> Result<()> {
        if self.segments == 0 || self.segments > u16::MAX as usize {
            return Err(Error::invalid("segment count must be in 1..=65535"));
        }
        if self.max_degree == 0 || 2 * self.max_degree > u16::MAX as usize {
            return Err(Error::invalid("max_degree out of range"));
        }
        if self.ef_construction == 0 {
            return Err(Error::invalid("ef_construction must be positive"));
        }
        if !(self.level_mult > 0.0 && self.level_mult.is_finite()) {
            return Err(Error::invalid("level multiplier must be positive"));
        }
        Ok(())
    }
}

/// Entry point of one segment's HNSW.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Entry {
    pub id: u32,
    pub level: usize,
}

/// Adjacency of one node at one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct HsigNode {
    /// Chunks laid out back to back; each slot carries the squared distance
    /// to the owner.
    slots: Vec<Scored>,
    /// Exclusive end offset of each chunk in `slots`.
    ends: Vec<u16>,
    next: Option<u32>,
    mask: BitVec<u8, Lsb0>,
}

impl HsigNode {
    fn new(segments: usize) -> Self {
        HsigNode {
            slots: Vec::new(),
            ends: vec![0; segments],
            next: None,
            mask: BitVec::new(),
        }
    }

    pub fn segments(&self) -> usize {
        self.ends.len()
    }

    pub fn chunk_range(&self, i: usize) -> Range<usize> {
        let start = if i == 0 { 0 } else { self.ends[i - 1] as usize };
        start..self.ends[i] as usize
    }

    pub fn chunk(&self, i: usize) -> &[Scored] {
        &self.slots[self.chunk_range(i)]
    }

    pub fn slots(&self) -> &[Scored] {
        &self.slots
    }

    pub fn next(&self) -> Option<u32> {
        self.next
    }

    pub fn mask(&self) -> &BitSlice<u8, Lsb0> {
        &self.mask
    }

    /// Targets of the bitmap-marked global edges.
    pub fn marked(&self) -> impl Iterator<Item = u32> + '_ {
        self.mask.iter_ones().map(|pos| self.slots[pos].id)
    }

    fn position_in_chunk(&self, i: usize, id: u32) -> Option<usize> {
        let r = self.chunk_range(i);
        self.slots[r.clone()].iter().position(|s| s.id == id).map(|p| r.start + p)
    }

    /// Replaces chunk `i`; the replaced slots lose their marks and the new
    /// ones start unmarked.
    fn set_chunk(&mut self, i: usize, chunk: Vec<Scored>) {
        let r = self.chunk_range(i);
        let new_len = chunk.len();
        self.slots.splice(r.clone(), chunk);
        let mut mask: BitVec<u8, Lsb0> = BitVec::with_capacity(self.slots.len());
        mask.extend_from_bitslice(&self.mask[..r.start]);
        mask.resize(r.start + new_len, false);
        mask.extend_from_bitslice(&self.mask[r.end..]);
        self.mask = mask;
        let delta = new_len as isize - r.len() as isize;
        for end in &mut self.ends[i..] {
            *end = (*end as isize + delta) as u16;
        }
    }

    /// Inserts `s` into chunk `i` keeping it sorted; the new slot is unmarked.
    fn insert_sorted(&mut self, i: usize, s: Scored) {
        let r = self.chunk_range(i);
        let pos = r.start + self.slots[r].partition_point(|x| *x < s);
        self.slots.insert(pos, s);
        self.mask.insert(pos, false);
        for end in &mut self.ends[i..] {
            *end += 1;
        }
    }

    fn set_marks(&mut self, ids: &[u32]) {
        self.mask.fill(false);
        for &id in ids {
            let pos = self.slots.iter().position(|s| s.id == id).expect("marked id is a neighbor");
            self.mask.set(pos, true);
        }
    }

    /// All slots sorted by distance to the owner.
    fn sorted_slots(&self) -> Vec<Scored> {
        let mut all = self.slots.clone();
        all.sort_unstable();
        all
    }
}

/// Hierarchical segmented inclusive graph over attributed vectors.
///
/// Searches take `&self` and keep per-query state private, so any number may
/// run concurrently; [`insert`](Self::insert) takes `&mut self`.
#[derive(Debug, Clone)]
pub struct HsigIndex {
    params: HsigParams,
    boundaries: SegmentBoundaries,
    store: Dataset,
    segment: Vec<u16>,
    levels: Vec<u8>,
    /// `nodes[id][layer]` for layers `0..=levels[id]`.
    nodes: Vec<Vec<HsigNode>>,
    entries: Vec<Option<Entry>>,
    /// First node of each layer's skip list.
    heads: Vec<Option<u32>>,
    view: CardinalityView,
    rng: ChaCha8Rng,
}

impl HsigIndex {
    /// Empty index with fixed boundaries. `params.segments` is overwritten by
    /// the boundary count.
    pub fn new(dim: usize, boundaries: SegmentBoundaries, mut params: HsigParams) -> Result<Self> {
        params.segments = boundaries.len();
        params.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(params.seed);
        Ok(HsigIndex {
            entries: vec![None; boundaries.len()],
            params,
            boundaries,
            store: Dataset::new(dim)?,
            segment: Vec::new(),
            levels: Vec::new(),
            nodes: Vec::new(),
            heads: Vec::new(),
            view: CardinalityView::default(),
            rng,
        })
    }

    /// Places equi-depth boundaries from the dataset's attributes (a uniform
    /// sample of at most `params.sample_cap` of them), then inserts every
    /// object in id order.
    pub fn build(dataset: &Dataset, params: HsigParams) -> Result<Self> {
        params.validate()?;
        if dataset.is_empty() {
            return Err(Error::invalid("cannot build an index from an empty dataset"));
        }
        let sample: Vec<f64> = if dataset.len() <= params.sample_cap {
            dataset.attributes().to_vec()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0x5a5a_5a5a);
            rand::seq::index::sample(&mut rng, dataset.len(), params.sample_cap)
                .into_iter()
                .map(|i| dataset.attributes()[i])
                .collect()
        };
        let segments = params.segments.min(sample.len());
        let boundaries = SegmentBoundaries::build(&sample, segments)?;
        let mut index = HsigIndex::new(dataset.dim(), boundaries, params)?;
        index.extend(dataset)?;
        Ok(index)
    }

    /// Inserts every object of `dataset`; ids continue from the current size.
    pub fn extend(&mut self, dataset: &Dataset) -> Result<()> {
        for id in 0..dataset.len() as u32 {
            self.push(dataset.vector(id), dataset.attribute(id))?;
        }
        Ok(())
    }

    /// Inserts one object under the next free id and returns that id.
    pub fn push(&mut self, values: &[f32], attribute: f64) -> Result<u32> {
        let id = self.len() as u32;
        self.insert(AttributedVector::new(id, values.to_vec(), attribute))?;
        Ok(id)
    }

    pub fn params(&self) -> &HsigParams {
        &self.params
    }

    pub fn boundaries(&self) -> &SegmentBoundaries {
        &self.boundaries
    }

    pub fn dataset(&self) -> &Dataset {
        &self.store
    }

    pub fn dim(&self) -> usize {
        self.store.dim()
    }

    pub fn len(&self) -> usize {
        self.store.len()
    }

    pub fn is_empty(&self) -> bool {
        self.store.is_empty()
    }

    pub fn segments(&self) -> usize {
        self.boundaries.len()
    }

    pub fn segment_of(&self, id: u32) -> usize {
        self.segment[id as usize] as usize
    }

    pub fn level(&self, id: u32) -> usize {
        self.levels[id as usize] as usize
    }

    pub fn node(&self, id: u32, layer: usize) -> Option<&HsigNode> {
        self.nodes.get(id as usize).and_then(|n| n.get(layer))
    }

    pub fn entry(&self, segment: usize) -> Option<Entry> {
        self.entries[segment]
    }

    pub fn top_level(&self) -> Option<usize> {
        self.heads.len().checked_sub(1)
    }

    pub fn skip_head(&self, layer: usize) -> Option<u32> {
        self.heads.get(layer).copied().flatten()
    }

    pub fn cardinality_view(&self) -> &CardinalityView {
        &self.view
    }

    /// Exact number of objects with attribute in `[low, high]`.
    pub fn cardinality(&self, low: f64, high: f64) -> usize {
        self.view.count(low, high)
    }

    #[inline]
    fn pair_dist(&self, a: u32, b: u32) -> f32 {
        squared_l2(self.store.vector(a), self.store.vector(b))
    }

    #[inline]
    fn chunk_cap(&self, layer: usize) -> usize {
        layer_cap(self.params.max_degree, layer)
    }

    fn key_cmp(&self, a: u32, b: u32) -> Ordering {
        self.store
            .attribute(a)
            .total_cmp(&self.store.attribute(b))
            .then(a.cmp(&b))
    }

    /// Inserts `v`. Its id must equal the current size: ids are dense and
    /// assigned in insertion order.
    pub fn insert(&mut self, v: AttributedVector) -> Result<()> {
        let expected = self.len() as u32;
        if v.id < expected {
            return Err(Error::invalid(format!("id {} is already present", v.id)));
        }
        if v.id > expected {
            return Err(Error::invalid(format!("ids must be contiguous: expected {expected}, got {}", v.id)));
        }
        let id = self.store.push(&v.values, v.attribute)?;
        let seg = self.boundaries.segment_of(v.attribute);
        let level = hnsw::draw_level(self.params.level_mult, &mut self.rng).min(MAX_LEVEL);
        self.segment.push(seg as u16);
        self.levels.push(level as u8);
        self.nodes.push(vec![HsigNode::new(self.segments()); level + 1]);

        for j in 0..self.segments() {
            self.connect_segment(id, seg, j, level);
        }
        match self.entries[seg] {
            Some(e) if e.level >= level => {}
            _ => self.entries[seg] = Some(Entry { id, level }),
        }
        self.splice_skip_list(id, level);
        for layer in 0..=level {
            self.mask_global_edges(id, layer);
        }
        self.view.insert(v.attribute);
        Ok(())
    }

    /// Builds `v`'s chunk `j` on every layer `v` shares with segment `j`'s
    /// HNSW, adding reverse edges into chunk `seg` of the chosen neighbors.
    fn connect_segment(&mut self, v: u32, seg: usize, j: usize, level: usize) {
        let Some(entry) = self.entries[j] else {
            return;
        };
        let query = self.store.vector(v).to_vec();
        let bound = self.len();
        let mut stats = SearchStats::default();
        let mut ep = Scored::new(entry.id, squared_l2(&query, self.store.vector(entry.id)));
        for layer in (level + 1..=entry.level).rev() {
            let view = ChunkView { nodes: &self.nodes, layer, chunk: j };
            let dist = |o: u32| squared_l2(&query, self.store.vector(o));
            ep = search_layer(&view, &[ep], 1, bound, dist, |_| true, &mut stats)[0];
        }
        for layer in (0..=level.min(entry.level)).rev() {
            let view = ChunkView { nodes: &self.nodes, layer, chunk: j };
            let dist = |o: u32| squared_l2(&query, self.store.vector(o));
            let ann = search_layer(&view, &[ep], self.params.ef_construction, bound, dist, |_| true, &mut stats);
            self.backbone_connect(v, seg, j, layer, &ann);
            ep = ann[0];
        }
    }

    /// Keeps at most `M` pruned candidates as `v`'s chunk `j` and links each
    /// back through its chunk `seg`, re-pruning chunks that overflow.
    fn backbone_connect(&mut self, v: u32, seg: usize, j: usize, layer: usize, ann: &[Scored]) {
        let chosen = prune(ann, self.params.max_degree, |a, b| self.pair_dist(a, b));
        let cap = self.chunk_cap(layer);
        for o in &chosen {
            let node = &mut self.nodes[o.id as usize][layer];
            node.insert_sorted(seg, Scored::new(v, o.dist));
            if node.chunk(seg).len() > cap {
                let kept = prune(self.nodes[o.id as usize][layer].chunk(seg), cap, |a, b| self.pair_dist(a, b));
                self.nodes[o.id as usize][layer].set_chunk(seg, kept);
                // An evicted slot may have been marked; reselect o's global edges.
                self.rebuild_mask(o.id, layer);
            }
        }
        self.nodes[v as usize][layer].set_chunk(j, chosen);
    }

    /// Prune over all of a node's slots at one layer: its global neighbors.
    fn global_selection(&self, id: u32, layer: usize) -> Vec<u32> {
        let all = self.nodes[id as usize][layer].sorted_slots();
        prune(&all, self.params.max_degree, |a, b| self.pair_dist(a, b))
            .into_iter()
            .map(|s| s.id)
            .collect()
    }

    fn rebuild_mask(&mut self, id: u32, layer: usize) {
        let chosen = self.global_selection(id, layer);
        self.nodes[id as usize][layer].set_marks(&chosen);
    }

    /// Marks `v`'s global edges at `layer`, and the reverse slot in each
    /// selected neighbor that links back to `v`, reselecting a neighbor whose
    /// marks exceed `M`.
    fn mask_global_edges(&mut self, v: u32, layer: usize) {
        let chosen = self.global_selection(v, layer);
        self.nodes[v as usize][layer].set_marks(&chosen);
        let seg = self.segment_of(v);
        for o in chosen {
            let node = &mut self.nodes[o as usize][layer];
            if let Some(pos) = node.position_in_chunk(seg, v) {
                node.mask.set(pos, true);
                if node.mask.count_ones() > self.params.max_degree {
                    self.rebuild_mask(o, layer);
                }
            }
        }
    }

    /// Walks the skip list from the top layer and returns, for every layer
    /// from the top down to 0, the last node whose key precedes `stop`
    /// (`None` means the head).
    fn skip_predecessors(&self, mut precedes: impl FnMut(u32) -> bool) -> Vec<Option<u32>> {
        let mut preds = vec![None; self.heads.len()];
        let mut pred: Option<u32> = None;
        for layer in (0..self.heads.len()).rev() {
            let mut next = match pred {
                None => self.heads[layer],
                Some(p) => self.nodes[p as usize][layer].next,
            };
            while let Some(n) = next {
                if !precedes(n) {
                    break;
                }
                pred = Some(n);
                next = self.nodes[n as usize][layer].next;
            }
            preds[layer] = pred;
        }
        preds
    }

    fn splice_skip_list(&mut self, v: u32, level: usize) {
        while self.heads.len() <= level {
            self.heads.push(None);
        }
        let preds = self.skip_predecessors(|n| self.key_cmp(n, v) == Ordering::Less);
        for (layer, pred) in preds.into_iter().enumerate().take(level + 1) {
            let slot = match pred {
                None => &mut self.heads[layer],
                Some(p) => &mut self.nodes[p as usize][layer].next,
            };
            let after = slot.replace(v);
            self.nodes[v as usize][layer].next = after;
        }
        debug!("spliced {v} into skip list at layers 0..={level}");
    }

    /// Node with the highest level across all segments, ties to the smaller
    /// id. This is the entry of the global (bitmap-marked) graph.
    fn global_entry(&self) -> Option<Entry> {
        self.entries
            .iter()
            .flatten()
            .copied()
            .max_by(|a, b| a.level.cmp(&b.level).then(b.id.cmp(&a.id)))
    }
}

/// Chunk-`j` edges at one layer: segment `j`'s HNSW layer.
struct ChunkView<'a> {
    nodes: &'a [Vec<HsigNode>],
    layer: usize,
    chunk: usize,
}

impl Neighborhood for ChunkView<'_> {
    fn neighbors(&self, node: u32, out: &mut Vec<u32>) {
        if let Some(n) = self.nodes[node as usize].get(self.layer) {
            out.extend(n.chunk(self.chunk).iter().map(|s| s.id));
        }
    }
}

/// Bitmap-marked edges at one layer: the global graph.
struct MaskedView<'a> {
    nodes: &'a [Vec<HsigNode>],
    layer: usize,
}

impl Neighborhood for MaskedView<'_> {
    fn neighbors(&self, node: u32, out: &mut Vec<u32>) {
        if let Some(n) = self.nodes[node as usize].get(self.layer) {
            out.extend(n.marked());
        }
    }
}
