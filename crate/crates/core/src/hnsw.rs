//! Plain HNSW: best-first layer search, the pruning heuristic, layer
//! insertion and hierarchical search.
//!
//! [`search_layer`] and [`prune`] are generic over how neighbors are produced,
//! and the segmented index reuses them for every one of its strategies.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Dataset, ResultSet};
use crate::distance::{squared_l2, Scored};
use crate::error::{Error, Result};
use crate::visited::with_visited;

/// Source of outgoing edges for a best-first search.
pub trait Neighborhood {
    /// Appends the neighbors of `node` to `out`.
    fn neighbors(&self, node: u32, out: &mut Vec<u32>);
}

/// Counters collected by one search.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub distance_evals: u64,
    pub hops: u64,
}

impl SearchStats {
    pub fn merge(&mut self, other: SearchStats) {
        self.distance_evals += other.distance_evals;
        self.hops += other.hops;
    }
}

/// Greedy best-first expansion over one layer.
///
/// `entries` are pre-scored seeds, `dist` scores a node against the query and
/// `admit` decides which visited nodes may enter the result set (all of them
/// for plain HNSW, in-range nodes for hybrid filtering). Expansion stops once
/// the result set holds `width` nodes and the closest pending candidate is
/// farther than all of them. Ids must be below `id_bound`.
///
/// Returns the result set sorted by distance.
pub fn search_layer<N, D, A>(
    graph: &N,
    entries: &[Scored],
    width: usize,
    id_bound: usize,
    mut dist: D,
    admit: A,
    stats: &mut SearchStats,
) -> Vec<Scored>
where
    N: Neighborhood + ?Sized,
    D: FnMut(u32) -> f32,
    A: Fn(u32) -> bool,
{
    let width = width.max(1);
    with_visited(id_bound, |visited| {
        let mut cand: BinaryHeap<Reverse<Scored>> = BinaryHeap::new();
        let mut ann: BinaryHeap<Scored> = BinaryHeap::with_capacity(width + 1);
        for &ep in entries {
            if !visited.insert(ep.id) {
                continue;
            }
            cand.push(Reverse(ep));
            if admit(ep.id) {
                ann.push(ep);
                if ann.len() > width {
                    ann.pop();
                }
            }
        }

        let mut buf = Vec::new();
        while let Some(Reverse(o)) = cand.pop() {
            if ann.len() >= width && o > *ann.peek().expect("non-empty") {
                break;
            }
            stats.hops += 1;
            buf.clear();
            graph.neighbors(o.id, &mut buf);
            for &v in &buf {
                if !visited.insert(v) {
                    continue;
                }
                let s = Scored::new(v, dist(v));
                stats.distance_evals += 1;
                if ann.len() < width || s < *ann.peek().expect("non-empty") {
                    cand.push(Reverse(s));
                    if admit(v) {
                        ann.push(s);
                        if ann.len() > width {
                            ann.pop();
                        }
                    }
                }
            }
        }
        ann.into_sorted_vec()
    })
}

/// Neighbor-selection heuristic.
///
/// `candidates` must be sorted by distance to the owner node. A candidate `r`
/// is kept unless some already-kept `e` is strictly closer to `r` than the
/// owner is. Stops after `max` are kept. `pair_dist(e, r)` returns the squared
/// distance between two candidates.
pub fn prune<D>(candidates: &[Scored], max: usize, mut pair_dist: D) -> Vec<Scored>
where
    D: FnMut(u32, u32) -> f32,
{
    let mut kept: Vec<Scored> = Vec::with_capacity(max.min(candidates.len()));
    for &r in candidates {
        if kept.len() >= max {
            break;
        }
        let dominated = kept.iter().any(|e| pair_dist(e.id, r.id) < r.dist);
        if !dominated {
            kept.push(r);
        }
    }
    kept
}

/// `⌊-ln(u) · m_L⌋` for a uniform draw `u` in `(0, 1]`.
pub fn level_for_uniform(u: f64, level_mult: f64) -> usize {
    let u = u.clamp(f64::MIN_POSITIVE, 1.0);
    (-u.ln() * level_mult).floor() as usize
}

/// Draws an exponentially distributed level.
pub fn draw_level<R: Rng + ?Sized>(level_mult: f64, rng: &mut R) -> usize {
    // random::<f64>() is in [0, 1); flip it into (0, 1].
    let u = 1.0 - rng.random::<f64>();
    level_for_uniform(u, level_mult)
}

/// The conventional level multiplier `1 / ln(M)`.
pub fn default_level_mult(max_degree: usize) -> f64 {
    1.0 / (max_degree.max(2) as f64).ln()
}

/// Degree cap of a layer: `2M` at the bottom, `M` above.
#[inline]
pub fn layer_cap(max_degree: usize, layer: usize) -> usize {
    if layer == 0 {
        2 * max_degree
    } else {
        max_degree
    }
}

/// One proximity-graph layer. Each present node keeps its neighbors sorted by
/// distance, along with that distance.
#[derive(Debug, Clone, Default)]
pub struct GraphLayer {
    lists: Vec<Option<Vec<Scored>>>,
    cap: usize,
    nodes: usize,
}

impl Neighborhood for GraphLayer {
    fn neighbors(&self, node: u32, out: &mut Vec<u32>) {
        if let Some(Some(list)) = self.lists.get(node as usize) {
            out.extend(list.iter().map(|s| s.id));
        }
    }
}

struct FilteredLayer<'a, F> {
    layer: &'a GraphLayer,
    filter: F,
}

impl<F: Fn(u32, u32) -> bool> Neighborhood for FilteredLayer<'_, F> {
    fn neighbors(&self, node: u32, out: &mut Vec<u32>) {
        if let Some(Some(list)) = self.layer.lists.get(node as usize) {
            out.extend(list.iter().map(|s| s.id).filter(|&v| (self.filter)(node, v)));
        }
    }
}

impl GraphLayer {
    pub fn new(cap: usize) -> Self {
        GraphLayer {
            lists: Vec::new(),
            cap,
            nodes: 0,
        }
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    /// Number of nodes present.
    pub fn len(&self) -> usize {
        self.nodes
    }

    pub fn is_empty(&self) -> bool {
        self.nodes == 0
    }

    pub fn contains(&self, id: u32) -> bool {
        matches!(self.lists.get(id as usize), Some(Some(_)))
    }

    pub fn neighbors_of(&self, id: u32) -> Option<&[Scored]> {
        self.lists.get(id as usize).and_then(|l| l.as_deref())
    }

    /// All directed edges `(source, target)`.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.lists.iter().enumerate().flat_map(|(src, list)| {
            list.iter().flatten().map(move |s| (src as u32, s.id))
        })
    }

    fn ensure_slot(&mut self, id: u32) {
        if self.lists.len() <= id as usize {
            self.lists.resize(id as usize + 1, None);
        }
    }

    /// Best-first search from `ep`, optionally following only edges accepted
    /// by `filter(source, target)`.
    pub fn ann_search(
        &self,
        vectors: &Dataset,
        query: &[f32],
        ep: u32,
        k: usize,
        filter: Option<&dyn Fn(u32, u32) -> bool>,
        stats: &mut SearchStats,
    ) -> Result<Vec<Scored>> {
        if !self.contains(ep) {
            return Err(Error::InvalidEntry(ep));
        }
        let seed = [Scored::new(ep, squared_l2(query, vectors.vector(ep)))];
        stats.distance_evals += 1;
        let dist = |v: u32| squared_l2(query, vectors.vector(v));
        let bound = vectors.len();
        Ok(match filter {
            None => search_layer(self, &seed, k, bound, dist, |_| true, stats),
            Some(f) => search_layer(&FilteredLayer { layer: self, filter: f }, &seed, k, bound, dist, |_| true, stats),
        })
    }

    /// Inserts `v`: search from `ep` with width `ef_construction`, keep at
    /// most `max_degree` pruned neighbors, link back, and re-prune any
    /// neighbor whose list exceeds the layer cap. Returns the search result.
    pub fn insert(
        &mut self,
        vectors: &Dataset,
        v: u32,
        ep: Option<u32>,
        max_degree: usize,
        ef_construction: usize,
    ) -> Result<Vec<Scored>> {
        if self.contains(v) {
            return Err(Error::invalid(format!("node {v} is already in the layer")));
        }
        let ann = match ep {
            Some(ep) => {
                let q = vectors.vector(v);
                self.ann_search(vectors, q, ep, ef_construction, None, &mut SearchStats::default())?
            }
            None if self.is_empty() => Vec::new(),
            None => return Err(Error::invalid("entry point required for a non-empty layer")),
        };
        self.ensure_slot(v);
        let pair = |a: u32, b: u32| squared_l2(vectors.vector(a), vectors.vector(b));
        let chosen = prune(&ann, max_degree, pair);
        for &o in &chosen {
            let list = self.lists[o.id as usize].as_mut().expect("neighbor is present");
            let back = Scored::new(v, o.dist);
            let pos = list.partition_point(|s| *s < back);
            list.insert(pos, back);
            if list.len() > self.cap {
                let owner = o.id;
                let kept = prune(list, self.cap, pair);
                debug_assert!(kept.iter().all(|s| s.id != owner));
                *list = kept;
            }
        }
        self.lists[v as usize] = Some(chosen);
        self.nodes += 1;
        Ok(ann)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HnswParams {
    /// M: out-degree of new nodes and the cap of upper layers.
    pub max_degree: usize,
    pub ef_construction: usize,
    /// m_L in the level draw.
    pub level_mult: f64,
    pub seed: u64,
}

impl Default for HnswParams {
    fn default() -> Self {
        HnswParams {
            max_degree: 16,
            ef_construction: 200,
            level_mult: default_level_mult(16),
            seed: 42,
        }
    }
}

/// Hierarchical navigable small world graph over its own copy of the vectors.
/// Nodes get dense local ids; each carries an external label.
#[derive(Debug, Clone)]
pub struct HnswIndex {
    params: HnswParams,
    vectors: Dataset,
    labels: Vec<u32>,
    levels: Vec<usize>,
    layers: Vec<GraphLayer>,
    entry: Option<u32>,
    rng: ChaCha8Rng,
}

impl HnswIndex {
    pub fn new(dim: usize, params: HnswParams) -> Result<Self> {
        if params.max_degree == 0 || params.ef_construction == 0 {
            return Err(Error::invalid("max_degree and ef_construction must be positive"));
        }
        if !(params.level_mult > 0.0) {
            return Err(Error::invalid("level multiplier must be positive"));
        }
        let rng = ChaCha8Rng::seed_from_u64(params.seed);
        Ok(HnswIndex {
            params,
            vectors: Dataset::new(dim)?,
            labels: Vec::new(),
            levels: Vec::new(),
            layers: Vec::new(),
            entry: None,
            rng,
        })
    }

    pub fn params(&self) -> &HnswParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn entry_point(&self) -> Option<u32> {
        self.entry
    }

    pub fn max_level(&self) -> Option<usize> {
        self.entry.map(|e| self.levels[e as usize])
    }

    pub fn layer(&self, level: usize) -> Option<&GraphLayer> {
        self.layers.get(level)
    }

    pub fn level(&self, local: u32) -> usize {
        self.levels[local as usize]
    }

    pub fn label(&self, local: u32) -> u32 {
        self.labels[local as usize]
    }

    /// Directed edges of one layer, expressed in labels.
    pub fn labeled_edges(&self, level: usize) -> Vec<(u32, u32)> {
        self.layers
            .get(level)
            .map(|l| l.edges().map(|(a, b)| (self.label(a), self.label(b))).collect())
            .unwrap_or_default()
    }

    /// Inserts with a level drawn from the index's generator.
    pub fn insert(&mut self, label: u32, values: &[f32]) -> Result<u32> {
        let level = draw_level(self.params.level_mult, &mut self.rng);
        self.insert_with_level(label, values, level)
    }

    /// Inserts with a caller-chosen level, so two indexes can share one level
    /// assignment.
    pub fn insert_with_level(&mut self, label: u32, values: &[f32], level: usize) -> Result<u32> {
        let v = self.vectors.push(values, 0.0)?;
        self.labels.push(label);
        self.levels.push(level);
        while self.layers.len() <= level {
            let cap = layer_cap(self.params.max_degree, self.layers.len());
            self.layers.push(GraphLayer::new(cap));
        }
        let (m, efc) = (self.params.max_degree, self.params.ef_construction);

        let Some(entry) = self.entry else {
            for l in 0..=level {
                self.layers[l].insert(&self.vectors, v, None, m, efc)?;
            }
            self.entry = Some(v);
            return Ok(v);
        };
        let top = self.levels[entry as usize];
        let q = self.vectors.vector(v).to_vec();
        let mut ep = entry;
        let mut stats = SearchStats::default();
        for l in (level + 1..=top).rev() {
            ep = self.layers[l].ann_search(&self.vectors, &q, ep, 1, None, &mut stats)?[0].id;
        }
        for l in (0..=level).rev() {
            if l > top {
                self.layers[l].insert(&self.vectors, v, None, m, efc)?;
                continue;
            }
            let ann = self.layers[l].insert(&self.vectors, v, Some(ep), m, efc)?;
            ep = ann[0].id;
        }
        if level > top {
            self.entry = Some(v);
        }
        Ok(v)
    }

    /// Descends the upper layers with width 1, then searches the bottom layer
    /// with width `max(ef, k)` and returns the best `k` (ids are labels).
    pub fn search(&self, query: &[f32], ef: usize, k: usize) -> Result<ResultSet> {
        self.search_with_stats(query, ef, k).map(|(r, _)| r)
    }

    pub fn search_with_stats(&self, query: &[f32], ef: usize, k: usize) -> Result<(ResultSet, SearchStats)> {
        let mut stats = SearchStats::default();
        let Some(entry) = self.entry else {
            return Ok((ResultSet::empty(), stats));
        };
        if query.len() != self.vectors.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.vectors.dim(),
                found: query.len(),
            });
        }
        let mut ep = entry;
        for l in (1..=self.levels[entry as usize]).rev() {
            ep = self.layers[l].ann_search(&self.vectors, query, ep, 1, None, &mut stats)?[0].id;
        }
        let ann = self.layers[0].ann_search(&self.vectors, query, ep, ef.max(k), None, &mut stats)?;
        let labeled = ann.into_iter().map(|s| Scored::new(self.label(s.id), s.dist)).collect();
        Ok((ResultSet::from_scored(labeled, k), stats))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{brute_force_rfnns, recall};
    use crate::RangeQuery;
    use proptest::prelude::*;
    use rand::Rng;
    use std::collections::{HashSet, VecDeque};

    fn random_vectors(seed: u64, n: usize, d: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ds = Dataset::new(d).unwrap();
        for _ in 0..n {
            let v: Vec<f32> = (0..d).map(|_| rng.random()).collect();
            ds.push(&v, 0.0).unwrap();
        }
        ds
    }

    fn build(ds: &Dataset, params: HnswParams) -> HnswIndex {
        let mut index = HnswIndex::new(ds.dim(), params).unwrap();
        for id in 0..ds.len() as u32 {
            index.insert(id, ds.vector(id)).unwrap();
        }
        index
    }

    fn complete_layer(ds: &Dataset) -> GraphLayer {
        let n = ds.len() as u32;
        let mut layer = GraphLayer::new(n as usize);
        layer.ensure_slot(n - 1);
        for a in 0..n {
            let mut list: Vec<Scored> = (0..n)
                .filter(|&b| b != a)
                .map(|b| Scored::new(b, squared_l2(ds.vector(a), ds.vector(b))))
                .collect();
            list.sort();
            layer.lists[a as usize] = Some(list);
            layer.nodes += 1;
        }
        layer
    }

    fn reachable(layer: &GraphLayer, from: u32) -> usize {
        let mut seen = HashSet::from([from]);
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            for s in layer.neighbors_of(u).unwrap() {
                if seen.insert(s.id) {
                    queue.push_back(s.id);
                }
            }
        }
        seen.len()
    }

    #[test]
    fn single_node_layer_returns_that_node() {
        let ds = random_vectors(1, 1, 3);
        let mut layer = GraphLayer::new(4);
        layer.insert(&ds, 0, None, 4, 10).unwrap();
        assert_eq!(layer.neighbors_of(0), Some(&[][..]));
        let got = layer
            .ann_search(&ds, &[9.0, 9.0, 9.0], 0, 5, None, &mut SearchStats::default())
            .unwrap();
        assert_eq!(got.iter().map(|s| s.id).collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn absent_entry_is_an_error() {
        let ds = random_vectors(1, 2, 3);
        let layer = GraphLayer::new(4);
        let err = layer.ann_search(&ds, &[0.0; 3], 1, 1, None, &mut SearchStats::default());
        assert!(matches!(err, Err(Error::InvalidEntry(1))));
    }

    #[test]
    fn fully_connected_layer_ranks_like_the_oracle() {
        let ds = random_vectors(2, 10, 4);
        let layer = complete_layer(&ds);
        let q = [0.3f32, 0.6, 0.1, 0.9];
        let got: Vec<u32> = layer
            .ann_search(&ds, &q, 4, 10, None, &mut SearchStats::default())
            .unwrap()
            .iter()
            .map(|s| s.id)
            .collect();
        let want = brute_force_rfnns(&ds, &RangeQuery::unbounded(q.to_vec(), 10).unwrap()).unwrap();
        assert_eq!(got, want.ids());
    }

    #[test]
    fn edge_filter_restricts_traversal() {
        let ds = random_vectors(3, 10, 4);
        let layer = complete_layer(&ds);
        let even = |_: u32, v: u32| v % 2 == 0;
        let got = layer
            .ann_search(&ds, &[0.5; 4], 0, 10, Some(&even), &mut SearchStats::default())
            .unwrap();
        assert!(got.iter().all(|s| s.id % 2 == 0));
        assert_eq!(got.len(), 5);
    }

    #[test]
    fn self_query_finds_itself_on_connected_graphs() {
        for seed in 0..100 {
            let ds = random_vectors(100 + seed, 60, 6);
            let mut layer = GraphLayer::new(16);
            for v in 0..ds.len() as u32 {
                let ep = (v > 0).then_some(0);
                layer.insert(&ds, v, ep, 8, 32).unwrap();
            }
            assert_eq!(reachable(&layer, 0), ds.len());
            let target = (seed as u32 * 7) % 60;
            let got = layer
                .ann_search(&ds, ds.vector(target), 0, 16, None, &mut SearchStats::default())
                .unwrap();
            assert_eq!(got[0].id, target);
            assert_eq!(got[0].dist, 0.0);
        }
    }

    #[test]
    fn prune_keeps_mutually_distant_candidates() {
        // Owner at origin, candidates on the axes: each is closer to the
        // owner than to any other candidate.
        let pts: Vec<[f32; 2]> = vec![[1.0, 0.0], [0.0, 1.1], [-1.2, 0.0], [0.0, -1.3]];
        let cands: Vec<Scored> = pts
            .iter()
            .enumerate()
            .map(|(i, p)| Scored::new(i as u32, squared_l2(&[0.0, 0.0], p)))
            .collect();
        let pair = |a: u32, b: u32| squared_l2(&pts[a as usize], &pts[b as usize]);
        assert_eq!(prune(&cands, 3, pair), cands[..3].to_vec());
        assert_eq!(prune(&cands, 8, pair), cands);
    }

    #[test]
    fn prune_two_point_case_by_hand() {
        let v = [0.0f32, 0.0];
        let r1 = [1.0f32, 0.0];
        let r2 = [1.5f32, 0.1];
        // Γ(v, r2) = sqrt(2.26) ≈ 1.503; Γ(r1, r2) = sqrt(0.26) ≈ 0.510.
        let gv = squared_l2(&v, &r2);
        let ge = squared_l2(&r1, &r2);
        assert!((gv - 2.26).abs() < 1e-6 && (ge - 0.26).abs() < 1e-6);
        let admitted = ge >= gv;
        let pts = [r1, r2];
        let cands = [Scored::new(0, squared_l2(&v, &r1)), Scored::new(1, gv)];
        let kept = prune(&cands, 2, |a, b| squared_l2(&pts[a as usize], &pts[b as usize]));
        assert_eq!(kept.len() == 2, admitted);
        assert_eq!(kept, vec![cands[0]]);

        // Move r2 to the far side of the owner: now it survives.
        let r2 = [-1.5f32, 0.1];
        let pts = [r1, r2];
        let cands = [Scored::new(0, 1.0), Scored::new(1, squared_l2(&v, &r2))];
        assert!(squared_l2(&r1, &r2) >= squared_l2(&v, &r2));
        assert_eq!(prune(&cands, 2, |a, b| squared_l2(&pts[a as usize], &pts[b as usize])).len(), 2);
    }

    #[test]
    fn duplicate_layer_insert_rejected() {
        let ds = random_vectors(4, 3, 2);
        let mut layer = GraphLayer::new(4);
        layer.insert(&ds, 0, None, 4, 8).unwrap();
        assert!(layer.insert(&ds, 0, Some(0), 4, 8).is_err());
    }

    #[test]
    fn layer_inserts_respect_cap_and_stay_connected() {
        let ds = random_vectors(5, 200, 8);
        let mut layer = GraphLayer::new(12);
        for v in 0..200u32 {
            layer.insert(&ds, v, (v > 0).then_some(0), 6, 40).unwrap();
        }
        for v in 0..200u32 {
            let list = layer.neighbors_of(v).unwrap();
            assert!(list.len() <= 12);
            assert!(list.iter().all(|s| s.id != v));
            assert!(list.windows(2).all(|w| w[0] <= w[1]));
        }
        assert_eq!(reachable(&layer, 0), 200);
    }

    #[test]
    fn forced_uniform_near_one_gives_level_zero() {
        let ml = default_level_mult(16);
        assert_eq!(level_for_uniform(1.0, ml), 0);
        assert_eq!(level_for_uniform(1.0 - 1e-12, ml), 0);
        assert_eq!(level_for_uniform(1.0 / 16.0, ml), 1);
    }

    #[test]
    fn level_tail_matches_exponential() {
        // P(level >= 1) = P(u <= exp(-1/m_L)) = 1/16 for m_L = 1/ln 16.
        let ml = default_level_mult(16);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let draws = 1_000_000;
        let high = (0..draws).filter(|_| draw_level(ml, &mut rng) >= 1).count();
        let p = high as f64 / draws as f64;
        let expected = (-1.0 / ml).exp();
        assert!((expected - 1.0 / 16.0).abs() < 1e-12);
        assert!((p - expected).abs() <= 0.1 * expected, "p = {p}");
    }

    #[test]
    fn seeded_levels_are_reproducible() {
        let ml = default_level_mult(16);
        let a: Vec<usize> = {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            (0..1000).map(|_| draw_level(ml, &mut rng)).collect()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b: Vec<usize> = (0..1000).map(|_| draw_level(ml, &mut rng)).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn single_object_index() {
        let ds = random_vectors(6, 1, 4);
        let index = build(&ds, HnswParams::default());
        assert_eq!(index.search(&[5.0; 4], 10, 3).unwrap().ids(), vec![0]);
        let empty = HnswIndex::new(4, HnswParams::default()).unwrap();
        assert!(empty.search(&[0.0; 4], 10, 3).unwrap().is_empty());
    }

    #[test]
    fn hierarchical_search_recall_on_random_vectors() {
        let ds = random_vectors(7, 1000, 8);
        let index = build(&ds, HnswParams { max_degree: 16, ef_construction: 200, ..Default::default() });
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut total = 0.0;
        for _ in 0..100 {
            let q: Vec<f32> = (0..8).map(|_| rng.random()).collect();
            let exact = brute_force_rfnns(&ds, &RangeQuery::unbounded(q.clone(), 10).unwrap()).unwrap();
            total += recall(&index.search(&q, 100, 10).unwrap(), &exact, 10);
        }
        assert!(total / 100.0 >= 0.99, "recall {}", total / 100.0);
    }

    #[test]
    fn exhaustive_width_is_exact() {
        let ds = random_vectors(9, 150, 5);
        let index = build(&ds, HnswParams { max_degree: 8, ef_construction: 64, ..Default::default() });
        let q = vec![0.2f32; 5];
        let exact = brute_force_rfnns(&ds, &RangeQuery::unbounded(q.clone(), 150).unwrap()).unwrap();
        assert_eq!(index.search(&q, 150, 150).unwrap(), exact);
    }

    #[test]
    fn structure_invariants_hold() {
        let ds = random_vectors(10, 600, 6);
        let m = 6;
        let index = build(&ds, HnswParams { max_degree: m, ef_construction: 50, ..Default::default() });
        let top = index.max_level().unwrap();
        assert_eq!(index.level(index.entry_point().unwrap()), top);
        for l in 0..=top {
            let layer = index.layer(l).unwrap();
            for v in 0..ds.len() as u32 {
                assert_eq!(layer.contains(v), index.level(v) >= l);
                if let Some(list) = layer.neighbors_of(v) {
                    assert!(list.len() <= layer_cap(m, l));
                    assert!(list.iter().all(|s| s.id != v && layer.contains(s.id)));
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn prune_is_idempotent(seed in any::<u64>(), n in 1usize..40, max in 1usize..12) {
            let ds = random_vectors(seed, n + 1, 3);
            let owner = ds.vector(0);
            let mut cands: Vec<Scored> = (1..=n as u32).map(|i| Scored::new(i, squared_l2(owner, ds.vector(i)))).collect();
            cands.sort();
            let pair = |a: u32, b: u32| squared_l2(ds.vector(a), ds.vector(b));
            let once = prune(&cands, max, pair);
            prop_assert_eq!(prune(&once, max, pair), once.clone());
            prop_assert!(once.len() <= max);
        }
    }
}
