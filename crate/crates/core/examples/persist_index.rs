// Save an index to disk, load it back, and check the results agree.

use unify::harness::synth::{gen_synthetic, gen_workload, WidthSpec};
use unify::selector::search_with;
use unify::{HsigIndex, HsigParams, Result, SearchParams, Strategy};

fn run() -> Result<()> {
    let data = gen_synthetic(1_500, 16, 0.0, 10_000.0, 11)?;
    let index = HsigIndex::build(&data, HsigParams::default())?;
    let path = std::env::temp_dir().join(format!("unify-example-{}.hsig", std::process::id()));
    index.save(&path)?;
    println!("wrote {} bytes to {}", std::fs::metadata(&path)?.len(), path.display());

    let loaded = HsigIndex::load(&path)?;
    let workload = gen_workload(&data, 30, 10, WidthSpec::default(), 12)?;
    let params = SearchParams::new(64, 16);
    let mut same = 0;
    for q in &workload.queries {
        for s in Strategy::ALL {
            same += usize::from(search_with(&index, q, s, &params)? == search_with(&loaded, q, s, &params)?);
        }
    }
    println!("{same}/{} searches identical after reload", workload.len() * 3);

    let mut bytes = std::fs::read(&path)?;
    bytes.truncate(bytes.len() / 2);
    match HsigIndex::read_from(&bytes[..]) {
        Err(e) => println!("truncated file rejected: {e}"),
        Ok(_) => println!("truncated file unexpectedly accepted"),
    }
    std::fs::remove_file(&path)?;
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
