//! MST versus raster-order priors on synthetic Voronoi token maps.
//!
//! ```text
//! cargo run --release --example ablation -- [seeds]
//! ```

use uigc::eval::{ablation_mst_vs_rt, AblationConfig};

fn main() -> anyhow::Result<()> {
    let seeds: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(20);
    let config = AblationConfig::default();
    let started = std::time::Instant::now();
    let report = ablation_mst_vs_rt(&config, &(0..seeds).collect::<Vec<_>>())?;
    print!("{}", report.to_csv());
    println!(
        "median masked accuracy  MST {:.4}  RT {:.4}",
        report.mst_median_accuracy, report.rt_median_accuracy
    );
    println!(
        "median kept bits/token  MST {:.4}  RT {:.4}",
        report.mst_median_bits, report.rt_median_bits
    );
    println!("{} seeds in {:.1?}", seeds, started.elapsed());
    Ok(())
}
