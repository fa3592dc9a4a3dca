// The three search strategies and auto-dispatch across range widths.

use unify::harness::synth::gen_synthetic;
use unify::selector::{search_auto, search_with};
use unify::{brute_force_rfnns, recall, HsigIndex, HsigParams, RangeQuery, Result, SearchParams, Strategy, Thresholds};

fn run() -> Result<()> {
    let data = gen_synthetic(4_000, 16, 0.0, 10_000.0, 2)?;
    let index = HsigIndex::build(&data, HsigParams::default())?;
    let thresholds = Thresholds::defaults(index.len());
    let params = SearchParams::new(128, 16);
    let probe = data.vector(7).to_vec();

    for width in [0.005, 0.05, 0.3, 0.9] {
        let high = 10_000.0 * width;
        let q = RangeQuery::new(probe.clone(), 0.0, high, 10)?;
        let exact = brute_force_rfnns(&data, &q)?;
        print!("width {:>5.1}%  |R| = {:4}", width * 100.0, index.cardinality(0.0, high));
        for s in Strategy::ALL {
            let r = search_with(&index, &q, s, &params)?;
            print!("  {s} {:.2}", recall(&r, &exact, q.k));
        }
        let (auto, chosen) = search_auto(&index, &q, &thresholds, &params)?;
        println!("  auto({chosen}) {:.2}", recall(&auto, &exact, q.k));
    }
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
