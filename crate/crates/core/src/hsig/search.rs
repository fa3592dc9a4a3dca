use std::cell::Cell;
use std::ops::RangeInclusive;

use crate::dataset::{RangeQuery, ResultSet};
use crate::distance::{squared_l2, Scored};
use crate::error::{Error, Result};
use crate::hnsw::{search_layer, Neighborhood, SearchStats};

use super::{HsigIndex, MaskedView};

/// How hybrid search picks the neighbors it follows from each visited node.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum NeighborSelection {
    /// Compute the query distance of every neighbor in the intersected chunks
    /// and follow the `m` closest.
    Global,
    /// Follow the first `⌈m / S'⌉` entries of each of the `S'` intersected
    /// chunks, which are already sorted by distance to the node.
    #[default]
    PerChunk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchParams {
    /// Beam width at the bottom layer (raised to `k` if smaller).
    pub ef: usize,
    /// Neighbors followed per hop in hybrid search.
    pub m: usize,
    pub selection: NeighborSelection,
}

impl SearchParams {
    pub fn new(ef: usize, m: usize) -> Self {
        SearchParams {
            ef,
            m,
            selection: NeighborSelection::default(),
        }
    }

    pub fn with_selection(mut self, selection: NeighborSelection) -> Self {
        self.selection = selection;
        self
    }
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams::new(64, 16)
    }
}

/// Union of the intersected chunks at one layer, capped at `m` per node.
struct HybridView<'a> {
    index: &'a HsigIndex,
    layer: usize,
    segments: RangeInclusive<usize>,
    m: usize,
    selection: NeighborSelection,
    query: &'a [f32],
    evals: Cell<u64>,
    scratch: std::cell::RefCell<Vec<Scored>>,
}

impl Neighborhood for HybridView<'_> {
    fn neighbors(&self, node: u32, out: &mut Vec<u32>) {
        let Some(n) = self.index.nodes[node as usize].get(self.layer) else {
            return;
        };
        match self.selection {
            NeighborSelection::PerChunk => {
                let per = self.m.div_ceil(self.segments.clone().count());
                for j in self.segments.clone() {
                    out.extend(n.chunk(j).iter().take(per).map(|s| s.id));
                }
            }
            NeighborSelection::Global => {
                let mut all = self.scratch.borrow_mut();
                all.clear();
                for j in self.segments.clone() {
                    for s in n.chunk(j) {
                        let d = squared_l2(self.query, self.index.store.vector(s.id));
                        all.push(Scored::new(s.id, d));
                    }
                }
                self.evals.set(self.evals.get() + all.len() as u64);
                if all.len() > self.m {
                    all.select_nth_unstable(self.m);
                    all.truncate(self.m);
                }
                out.extend(all.iter().map(|s| s.id));
            }
        }
    }
}

impl HsigIndex {
    fn check_query(&self, query: &RangeQuery) -> Result<()> {
        query.check_dim(self.dim())
    }

    /// Exact answer: walks the skip list to the first object with attribute
    /// at least `low`, then scores every object up to `high`.
    pub fn search_pre(&self, query: &RangeQuery) -> Result<ResultSet> {
        self.search_pre_with_stats(query).map(|(r, _)| r)
    }

    pub fn search_pre_with_stats(&self, query: &RangeQuery) -> Result<(ResultSet, SearchStats)> {
        self.check_query(query)?;
        let mut stats = SearchStats::default();
        if self.heads.is_empty() {
            return Ok((ResultSet::empty(), stats));
        }
        let preds = self.skip_predecessors(|n| {
            stats.hops += 1;
            self.store.attribute(n) < query.low
        });
        let mut cur = match preds[0] {
            None => self.heads[0],
            Some(p) => self.nodes[p as usize][0].next,
        };
        let mut top: std::collections::BinaryHeap<Scored> = std::collections::BinaryHeap::new();
        while let Some(id) = cur {
            if self.store.attribute(id) > query.high {
                break;
            }
            let s = Scored::new(id, squared_l2(&query.vector, self.store.vector(id)));
            stats.distance_evals += 1;
            if top.len() < query.k {
                top.push(s);
            } else if s < *top.peek().expect("non-empty") {
                top.pop();
                top.push(s);
            }
            cur = self.nodes[id as usize][0].next;
        }
        Ok((ResultSet::from_scored(top.into_vec(), query.k), stats))
    }

    /// Searches the global graph formed by the bitmap-marked edges and keeps
    /// the in-range results.
    pub fn search_post(&self, query: &RangeQuery, ef: usize) -> Result<ResultSet> {
        self.search_post_with_stats(query, ef).map(|(r, _)| r)
    }

    pub fn search_post_with_stats(&self, query: &RangeQuery, ef: usize) -> Result<(ResultSet, SearchStats)> {
        self.check_query(query)?;
        let mut stats = SearchStats::default();
        let Some(entry) = self.global_entry() else {
            return Ok((ResultSet::empty(), stats));
        };
        let q = &query.vector;
        let dist = |o: u32| squared_l2(q, self.store.vector(o));
        let mut ep = Scored::new(entry.id, dist(entry.id));
        stats.distance_evals += 1;
        for layer in (1..=entry.level).rev() {
            let view = MaskedView { nodes: &self.nodes, layer };
            ep = search_layer(&view, &[ep], 1, self.len(), dist, |_| true, &mut stats)[0];
        }
        let view = MaskedView { nodes: &self.nodes, layer: 0 };
        let ann = search_layer(&view, &[ep], ef.max(query.k), self.len(), dist, |_| true, &mut stats);
        let hits = ann
            .into_iter()
            .filter(|s| query.contains(self.store.attribute(s.id)))
            .collect();
        Ok((ResultSet::from_scored(hits, query.k), stats))
    }

    /// Searches only the chunks of segments that overlap the range; only
    /// in-range nodes enter the result set.
    pub fn search_hybrid(&self, query: &RangeQuery, params: &SearchParams) -> Result<ResultSet> {
        self.search_hybrid_with_stats(query, params).map(|(r, _)| r)
    }

    pub fn search_hybrid_with_stats(
        &self,
        query: &RangeQuery,
        params: &SearchParams,
    ) -> Result<(ResultSet, SearchStats)> {
        self.check_query(query)?;
        if params.m == 0 {
            return Err(Error::invalid("m must be at least 1"));
        }
        let mut stats = SearchStats::default();
        let segments = self.boundaries.intersecting(query.low, query.high);
        let q = &query.vector;
        let dist = |o: u32| squared_l2(q, self.store.vector(o));

        let starts: Vec<_> = segments.clone().filter_map(|j| self.entries[j]).collect();
        let Some(top) = starts.iter().map(|e| e.level).max() else {
            return Ok((ResultSet::empty(), stats));
        };
        let mut ep = starts
            .iter()
            .filter(|e| e.level == top)
            .map(|e| {
                stats.distance_evals += 1;
                Scored::new(e.id, dist(e.id))
            })
            .min()
            .expect("at least one entry at the top level");

        for layer in (1..=top).rev() {
            ep = self.hybrid_layer(layer, query, segments.clone(), params, &[ep], 1, false, &mut stats)[0];
        }
        let ann = self.hybrid_layer(0, query, segments, params, &[ep], params.ef.max(query.k), true, &mut stats);
        Ok((ResultSet::from_scored(ann, query.k), stats))
    }

    /// One layer of hybrid search from `entries`. With `in_range_only`, nodes
    /// outside `[low, high]` are traversed but never returned.
    #[allow(clippy::too_many_arguments)]
    fn hybrid_layer(
        &self,
        layer: usize,
        query: &RangeQuery,
        segments: RangeInclusive<usize>,
        params: &SearchParams,
        entries: &[Scored],
        width: usize,
        in_range_only: bool,
        stats: &mut SearchStats,
    ) -> Vec<Scored> {
        let view = HybridView {
            index: self,
            layer,
            segments,
            m: params.m,
            selection: params.selection,
            query: &query.vector,
            evals: Cell::new(0),
            scratch: Default::default(),
        };
        let q = &query.vector;
        let dist = |o: u32| squared_l2(q, self.store.vector(o));
        let admit = |o: u32| !in_range_only || query.contains(self.store.attribute(o));
        let out = search_layer(&view, entries, width, self.len(), dist, admit, stats);
        stats.distance_evals += view.evals.get();
        out
    }

    /// Neighbors hybrid search would follow from `node` at `layer` for a
    /// query, in no particular order.
    pub fn hybrid_neighbors(&self, node: u32, layer: usize, query: &RangeQuery, params: &SearchParams) -> Vec<u32> {
        let view = HybridView {
            index: self,
            layer,
            segments: self.boundaries.intersecting(query.low, query.high),
            m: params.m,
            selection: params.selection,
            query: &query.vector,
            evals: Cell::new(0),
            scratch: Default::default(),
        };
        let mut out = Vec::new();
        view.neighbors(node, &mut out);
        out
    }
}
