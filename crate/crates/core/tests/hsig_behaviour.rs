mod common;

use std::collections::{HashSet, VecDeque};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{desk_index, mean, serial};
use unify::harness::bench::{ground_truth, measure, Mode};
use unify::harness::synth::{gen_synthetic, gen_workload, WidthSpec};
use unify::hnsw::prune;
use unify::selector::{calibrate, search_with, select_strategy, CalibrationConfig};
use unify::{
    brute_force_rfnns, recall, squared_l2, HsigIndex, HsigParams, NeighborSelection, RangeQuery, ResultSet,
    Scored, SearchParams, SegmentBoundaries, Strategy, Thresholds,
};

fn params(segments: usize) -> HsigParams {
    HsigParams { segments, ..HsigParams::default() }
}

fn mean_recall(queries: &[RangeQuery], truth: &[ResultSet], run: impl Fn(&RangeQuery) -> ResultSet) -> f64 {
    mean(queries.iter().zip(truth).map(|(q, t)| recall(&run(q), t, q.k)))
}

#[test]
fn layer0_chunk_graphs_are_reachable_from_their_entries() {
    let data = gen_synthetic(400, 8, 0.0, 10_000.0, 1).unwrap();
    let index = HsigIndex::build(&data, params(2)).unwrap();
    for j in 0..2 {
        let entry = index.entry(j).unwrap().id;
        let mut seen = HashSet::from([entry]);
        let mut queue = VecDeque::from([entry]);
        while let Some(u) = queue.pop_front() {
            for s in index.node(u, 0).unwrap().chunk(j) {
                if seen.insert(s.id) {
                    queue.push_back(s.id);
                }
            }
        }
        let members: HashSet<u32> = (0..400).filter(|&i| index.segment_of(i) == j).collect();
        assert_eq!(seen, members, "segment {j}");
    }
}

#[test]
fn single_segment_marks_are_the_pruned_chunk_at_insert_time() {
    let data = gen_synthetic(300, 6, 0.0, 1.0, 2).unwrap();
    let mut index = HsigIndex::new(6, SegmentBoundaries::build(data.attributes(), 1).unwrap(), params(1)).unwrap();
    let m = index.params().max_degree;
    for id in 0..300u32 {
        index.push(data.vector(id), data.attribute(id)).unwrap();
        for layer in 0..=index.level(id) {
            let node = index.node(id, layer).unwrap();
            let mut chunk = node.chunk(0).to_vec();
            chunk.sort();
            let expect: HashSet<u32> = prune(&chunk, m, |a, b| squared_l2(data.vector(a), data.vector(b)))
                .into_iter()
                .map(|s: Scored| s.id)
                .collect();
            let marked: HashSet<u32> = node.marked().collect();
            assert_eq!(marked, expect, "node {id} layer {layer}");
        }
    }
}

#[test]
fn masked_graph_answers_full_range_queries() {
    let data = gen_synthetic(1000, 16, 0.0, 10_000.0, 3).unwrap();
    let index = HsigIndex::build(&data, params(4)).unwrap();
    let w = gen_workload(&data, 100, 10, WidthSpec::Fixed(1.0), 30).unwrap();
    let truth = ground_truth(&index, &w).unwrap();
    let r = mean_recall(&w.queries, &truth, |q| index.search_post(q, 200).unwrap());
    assert!(r >= 0.95, "post recall {r}");
}

#[test]
fn empty_index_round_trips() {
    let b = SegmentBoundaries::build(&[1.0, 2.0, 3.0], 3).unwrap();
    let index = HsigIndex::new(4, b, params(3)).unwrap();
    let mut bytes = Vec::new();
    index.write_to(&mut bytes).unwrap();
    let back = HsigIndex::read_from(&bytes[..]).unwrap();
    assert!(back.is_empty());
    assert_eq!(back.segments(), 3);
    let q = RangeQuery::unbounded(vec![0.0; 4], 5).unwrap();
    for s in Strategy::ALL {
        assert!(search_with(&back, &q, s, &SearchParams::default()).unwrap().is_empty());
    }
}

#[test]
fn single_object_range_returns_that_object() {
    let data = gen_synthetic(500, 8, 0.0, 10_000.0, 4).unwrap();
    let index = HsigIndex::build(&data, params(4)).unwrap();
    let far = vec![100.0; 8];
    for id in [0u32, 17, 250, 499] {
        let a = data.attribute(id);
        let q = RangeQuery::new(far.clone(), a, a, 10).unwrap();
        assert_eq!(index.search_pre(&q).unwrap().ids(), vec![id]);
        assert_eq!(index.search_hybrid(&q, &SearchParams::new(32, 16)).unwrap().ids(), vec![id]);
    }
    let above = RangeQuery::new(far, 20_000.0, 30_000.0, 10).unwrap();
    assert!(index.search_pre(&above).unwrap().is_empty());
    assert!(index.search_post(&above, 64).unwrap().is_empty());
}

#[test]
fn one_segment_range_and_exhaustive_hybrid() {
    let _g = serial();
    let data = gen_synthetic(5000, 16, 0.0, 10_000.0, 5).unwrap();
    let index = HsigIndex::build(&data, HsigParams::default()).unwrap();
    let cuts = index.boundaries().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let mut recalls = Vec::new();
    for _ in 0..100 {
        let j = rng.random_range(0..index.segments());
        let (low, high) = cuts.interval(j);
        let v: Vec<f32> = (0..16).map(|_| rng.random()).collect();
        let q = RangeQuery::new(v, low, high, 10).unwrap();
        let exact = brute_force_rfnns(&data, &q).unwrap();
        recalls.push(recall(&index.search_hybrid(&q, &SearchParams::new(200, 16)).unwrap(), &exact, 10));
    }
    let r = mean(recalls.iter().copied());
    assert!(r >= 0.95, "one-segment hybrid recall {r}");

    let small = gen_synthetic(800, 8, 0.0, 10_000.0, 6).unwrap();
    let index = HsigIndex::build(&small, HsigParams::default()).unwrap();
    for _ in 0..20 {
        let v: Vec<f32> = (0..8).map(|_| rng.random()).collect();
        let q = RangeQuery::unbounded(v, 10).unwrap();
        let got = index.search_hybrid(&q, &SearchParams::new(small.len(), 16)).unwrap();
        assert_eq!(got.ids(), brute_force_rfnns(&small, &q).unwrap().ids());
    }
}

#[test]
fn mid_range_hybrid_against_pre() {
    let _g = serial();
    let (data, index) = desk_index();
    let w = gen_workload(data, 100, 10, WidthSpec::Fixed(0.25), 7).unwrap();
    let truth = ground_truth(index, &w).unwrap();
    let t = Thresholds::defaults(index.len());
    let p = SearchParams::new(150, 16);
    let hyb = measure(index, &w.queries, &truth, Mode::Fixed(Strategy::Hybrid), &p, &t, 3).unwrap();
    let pre = measure(index, &w.queries, &truth, Mode::Fixed(Strategy::Pre), &p, &t, 3).unwrap();
    let r = mean(hyb.iter().map(|x| x.recall));
    let (h, s) = (mean(hyb.iter().map(|x| x.latency)), mean(pre.iter().map(|x| x.latency)));
    println!("25% ranges: hybrid {:.1}us recall {r:.4}, pre {:.1}us", h * 1e6, s * 1e6);
    assert!(r >= 0.9);
    assert!(t.select(index.cardinality(w.queries[0].low, w.queries[0].high)) == Strategy::Hybrid);
}

#[test]
fn chunk_selection_modes_compared() {
    let data = gen_synthetic(1000, 16, 0.0, 10_000.0, 8).unwrap();
    let index = HsigIndex::build(&data, HsigParams::default()).unwrap();
    let w = gen_workload(&data, 100, 10, WidthSpec::Uniform { min: 0.1, max: 1.0 }, 80).unwrap();
    let truth = ground_truth(&index, &w).unwrap();
    let run = |sel| {
        let p = SearchParams::new(150, 16).with_selection(sel);
        let mut evals = 0;
        let r = mean(w.queries.iter().zip(&truth).map(|(q, t)| {
            let (res, stats) = index.search_hybrid_with_stats(q, &p).unwrap();
            evals += stats.distance_evals;
            recall(&res, t, q.k)
        }));
        (r, evals)
    };
    let (r1, e1) = run(NeighborSelection::Global);
    let (r2, e2) = run(NeighborSelection::PerChunk);
    assert!(r1 >= 0.9 && r2 >= 0.9, "recall global {r1} per-chunk {r2}");
    assert!(e2 < e1, "evaluations global {e1} per-chunk {e2}");
}

#[test]
fn unlimited_global_selection_traverses_every_stored_edge() {
    let data = gen_synthetic(600, 8, 0.0, 10_000.0, 9).unwrap();
    let index = HsigIndex::build(&data, params(4)).unwrap();
    let m = index.params().max_degree;
    let q = RangeQuery::new(vec![0.5; 8], 0.0, 10_000.0, 10).unwrap();
    let p = SearchParams::new(50, m * index.segments() * 2).with_selection(NeighborSelection::Global);
    for id in (0..600).step_by(37) {
        for layer in 0..=index.level(id) {
            let node = index.node(id, layer).unwrap();
            let mut all: Vec<u32> = node.slots().iter().map(|s| s.id).collect();
            let mut got = index.hybrid_neighbors(id, layer, &q, &p);
            all.sort();
            got.sort();
            assert_eq!(got, all);
        }
    }
}

#[test]
fn recall_does_not_drop_with_wider_search() {
    let _g = serial();
    let (data, index) = desk_index();
    let w = gen_workload(data, 100, 10, WidthSpec::default(), 10).unwrap();
    let truth = ground_truth(index, &w).unwrap();
    let at = |ef, m| mean_recall(&w.queries, &truth, |q| index.search_hybrid(q, &SearchParams::new(ef, m)).unwrap());
    let by_ef: Vec<f64> = [50, 100, 200, 400].iter().map(|&ef| at(ef, 16)).collect();
    let by_m: Vec<f64> = [8, 16, 32].iter().map(|&m| at(100, m)).collect();
    for seq in [&by_ef, &by_m] {
        assert!(seq.windows(2).all(|p| p[1] >= p[0] - 0.01), "{seq:?}");
    }
}

#[test]
fn incremental_halves_match_batch_recall() {
    let _g = serial();
    let data = gen_synthetic(2000, 16, 0.0, 10_000.0, 11).unwrap();
    let batch = HsigIndex::build(&data, HsigParams::default()).unwrap();
    let mut halves = HsigIndex::build(&data.slice(0..1000), HsigParams::default()).unwrap();
    halves.extend(&data.slice(1000..2000)).unwrap();
    let w = gen_workload(&data, 200, 10, WidthSpec::default(), 110).unwrap();
    let truth = ground_truth(&batch, &w).unwrap();
    let p = SearchParams::new(100, 16);
    let rb = mean_recall(&w.queries, &truth, |q| batch.search_hybrid(q, &p).unwrap());
    let rh = mean_recall(&w.queries, &truth, |q| halves.search_hybrid(q, &p).unwrap());
    assert!((rb - rh).abs() <= 0.02, "batch {rb} halves {rh}");
}

#[test]
fn calibrated_routing_matches_per_query_winner() {
    let _g = serial();
    let (data, index) = desk_index();
    let widths = WidthSpec::default();
    let sample = gen_workload(data, 200, 10, widths, 12).unwrap();
    let held = gen_workload(data, 200, 10, widths, 13).unwrap();
    let config = CalibrationConfig::default();
    let t = calibrate(index, &sample.queries, &config).unwrap();
    let truth = ground_truth(index, &held).unwrap();
    let time = |q: &RangeQuery, s: Strategy, ef: usize| {
        let mut v = Vec::with_capacity(5);
        let mut out = None;
        for _ in 0..5 {
            let start = Instant::now();
            out = Some(search_with(index, q, s, &SearchParams::new(ef, config.m)).unwrap());
            v.push(start.elapsed().as_secs_f64());
        }
        v.sort_by(f64::total_cmp);
        (out.unwrap(), v[2])
    };
    let mut agree = 0;
    for (q, exact) in held.queries.iter().zip(&truth) {
        let mut best = (f64::INFINITY, Strategy::Pre);
        for s in Strategy::ALL {
            let sweep: &[usize] = if s == Strategy::Pre { &[0] } else { &config.ef_sweep };
            for &ef in sweep {
                let (res, lat) = time(q, s, ef);
                if recall(&res, exact, q.k) >= config.recall_target {
                    if lat < best.0 {
                        best = (lat, s);
                    }
                    break;
                }
            }
        }
        if select_strategy(index, q, &t).0 == best.1 {
            agree += 1;
        }
    }
    let share = agree as f64 / held.len() as f64;
    println!("routing agreement {share:.3} (tau_a {}, tau_b {})", t.tau_a, t.tau_b);
    assert!(share >= 0.9);
}

#[test]
fn tiny_index_calibrates_to_a_total_dispatch() {
    let data = gen_synthetic(10, 4, 0.0, 1.0, 14).unwrap();
    let index = HsigIndex::build(&data, params(2)).unwrap();
    let w = gen_workload(&data, 20, 3, WidthSpec::default(), 15).unwrap();
    let t = calibrate(&index, &w.queries, &CalibrationConfig { ef_sweep: vec![8, 16], repeats: 1, ..Default::default() }).unwrap();
    assert!(t.tau_a < t.tau_b);
    for q in &w.queries {
        let (s, y) = select_strategy(&index, q, &t);
        assert_eq!(s, t.select(y));
        search_with(&index, q, s, &SearchParams::new(16, 16)).unwrap();
    }
    assert_eq!(index.cardinality(f64::NEG_INFINITY, f64::INFINITY), 10);
}
