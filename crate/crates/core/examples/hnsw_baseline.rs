// The plain HNSW the index is built from, used as an unfiltered baseline.

use unify::harness::synth::gen_synthetic;
use unify::{brute_force_rfnns, recall, HnswIndex, HnswParams, RangeQuery, Result};

fn run() -> Result<()> {
    let data = gen_synthetic(2_000, 8, 0.0, 1.0, 13)?;
    let mut hnsw = HnswIndex::new(8, HnswParams::default())?;
    for id in 0..data.len() as u32 {
        hnsw.insert(id, data.vector(id))?;
    }
    println!("{} nodes, max level {:?}", hnsw.len(), hnsw.max_level());

    let queries: Vec<RangeQuery> = (0..50)
        .map(|i| RangeQuery::unbounded(data.vector(i * 31).iter().map(|x| x + 0.01).collect(), 10))
        .collect::<Result<_>>()?;
    for ef in [10, 40, 160] {
        let mut total = 0.0;
        let mut evals = 0;
        for q in &queries {
            let (r, stats) = hnsw.search_with_stats(&q.vector, ef, q.k)?;
            total += recall(&r, &brute_force_rfnns(&data, q)?, q.k);
            evals += stats.distance_evals;
        }
        println!("ef {ef:4}: recall {:.3}, {} distance evaluations per query", total / 50.0, evals / 50);
    }
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
