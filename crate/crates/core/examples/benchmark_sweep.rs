// Recall and throughput of every strategy over an ef sweep.

use unify::harness::bench::{ground_truth, run_benchmark, BenchConfig};
use unify::harness::synth::{gen_synthetic, gen_workload, WidthSpec};
use unify::{HsigIndex, HsigParams, Result, Thresholds};

fn run() -> Result<()> {
    let data = gen_synthetic(3_000, 16, 0.0, 10_000.0, 14)?;
    let index = HsigIndex::build(&data, HsigParams::default())?;
    let workload = gen_workload(&data, 60, 10, WidthSpec::default(), 15)?;
    let truth = ground_truth(&index, &workload)?;
    let mut config = BenchConfig::new(Thresholds::defaults(index.len()));
    config.ef_sweep = vec![32, 64, 128];
    config.repeats = 1;
    let report = run_benchmark(&index, &workload, &truth, &config)?;
    print!("{}", report.table());

    let csv = std::env::temp_dir().join(format!("unify-bench-{}.csv", std::process::id()));
    report.write_csv(&csv)?;
    println!("{} rows written to {}", report.rows.len(), csv.display());
    std::fs::remove_file(&csv)?;
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
