// Grow an index batch by batch and compare it with a one-shot build.

use unify::harness::bench::ground_truth;
use unify::harness::scaling::build_incrementally;
use unify::harness::synth::{gen_synthetic, gen_workload, WidthSpec};
use unify::{recall, HsigIndex, HsigParams, Result, SearchParams};

fn run() -> Result<()> {
    let data = gen_synthetic(2_000, 16, 0.0, 10_000.0, 6)?;
    let params = HsigParams::default();
    let (grown, rows) = build_incrementally(&data, &params, 4)?;
    for r in &rows {
        println!("n = {:5}  batch time {:.3}s", r.n_after, r.build_secs);
    }

    let mut single = HsigIndex::build(&data.slice(0..1_999), params.clone())?;
    let id = single.push(data.vector(1_999), data.attribute(1_999))?;
    println!("pushed object {id}; structural problems: {}", single.validate().len());

    let batch = HsigIndex::build(&data, params)?;
    let workload = gen_workload(&data, 100, 10, WidthSpec::default(), 7)?;
    let truth = ground_truth(&batch, &workload)?;
    let search = SearchParams::new(100, 16);
    for (name, index) in [("batch", &batch), ("incremental", &grown)] {
        let mut total = 0.0;
        for (q, t) in workload.queries.iter().zip(&truth) {
            total += recall(&index.search_hybrid(q, &search)?, t, q.k);
        }
        println!("{name:12} recall {:.4}", total / workload.len() as f64);
    }
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
