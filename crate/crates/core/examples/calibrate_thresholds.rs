// Tune the pre/hybrid/post cardinality thresholds on a sample workload.

use unify::harness::synth::{gen_synthetic, gen_workload, WidthSpec};
use unify::selector::{calibrate, select_strategy, CalibrationConfig};
use unify::{HsigIndex, HsigParams, Result, Strategy, Thresholds};

fn run() -> Result<()> {
    let data = gen_synthetic(4_000, 16, 0.0, 10_000.0, 8)?;
    let index = HsigIndex::build(&data, HsigParams::default())?;
    let sample = gen_workload(&data, 120, 10, WidthSpec::default(), 9)?;
    let config = CalibrationConfig { repeats: 1, ..CalibrationConfig::default() };
    let tuned = calibrate(&index, &sample.queries, &config)?;
    let defaults = Thresholds::defaults(index.len());
    println!("defaults: tau_a {} tau_b {}", defaults.tau_a, defaults.tau_b);
    println!("tuned:    tau_a {} tau_b {}", tuned.tau_a, tuned.tau_b);

    let held_out = gen_workload(&data, 200, 10, WidthSpec::default(), 10)?;
    let mut counts = [0usize; 3];
    for q in &held_out.queries {
        let (s, _) = select_strategy(&index, q, &tuned);
        counts[Strategy::ALL.iter().position(|&x| x == s).unwrap_or(0)] += 1;
    }
    for (s, c) in Strategy::ALL.iter().zip(counts) {
        println!("{s:>6}: {c} queries");
    }

    let path = std::env::temp_dir().join("unify-thresholds.txt");
    tuned.save(&path)?;
    assert_eq!(Thresholds::load(&path)?, tuned);
    std::fs::remove_file(&path)?;
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
