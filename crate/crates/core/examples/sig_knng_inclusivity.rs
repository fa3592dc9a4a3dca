// The segmented kNN graph contains the kNN graph of every segment union,
// and the hierarchical index contains most of a per-range HNSW.

use unify::harness::inclusivity::{measure_inclusiveness, validate_sig_knng};
use unify::harness::synth::gen_synthetic;
use unify::{HsigIndex, HsigParams, Result};

fn run() -> Result<()> {
    let small = gen_synthetic(300, 8, 0.0, 10_000.0, 3)?;
    let rows = validate_sig_knng(&small, 4, 5)?;
    let exact = rows.iter().filter(|r| r.inclusivity == 1.0).count();
    println!("kNN inclusivity: {exact}/{} segment combinations fully contained", rows.len());

    let data = gen_synthetic(3_000, 16, 0.0, 10_000.0, 4)?;
    let index = HsigIndex::build(&data, HsigParams::default())?;
    println!("segments  reference edges  contained  control");
    for r in measure_inclusiveness(&index, &[1, 2, 4, 8], 5)? {
        println!("{:8}  {:15}  {:8.2}%  {:6.2}%", r.segments, r.reference_edges, r.inclusiveness, r.shuffled_control);
    }
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
