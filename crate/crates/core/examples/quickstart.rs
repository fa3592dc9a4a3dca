// Build an index over random data and answer one range query.

use unify::harness::synth::gen_synthetic;
use unify::{brute_force_rfnns, recall, HsigIndex, HsigParams, RangeQuery, Result, SearchParams};

fn run() -> Result<()> {
    let data = gen_synthetic(3_000, 16, 0.0, 10_000.0, 1)?;
    let index = HsigIndex::build(&data, HsigParams::default())?;
    println!("{} objects in {} segments, top level {:?}", index.len(), index.segments(), index.top_level());

    let query = RangeQuery::new(data.vector(42).to_vec(), 2_500.0, 5_000.0, 10)?;
    let hits = index.search_hybrid(&query, &SearchParams::new(100, 16))?;
    for n in hits.iter() {
        println!("  id {:5}  attr {:8.1}  dist {:.4}", n.id, data.attribute(n.id), n.distance);
    }
    let exact = brute_force_rfnns(&data, &query)?;
    println!("recall {:.2}", recall(&hits, &exact, query.k));
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
