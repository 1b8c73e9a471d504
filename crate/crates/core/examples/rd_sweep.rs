//! Rate-distortion sweep over the desk suite for K = 16, 64 and 256 in
//! no-lost and uigc modes. Writes CSV and JSON when given a directory.
//!
//! ```text
//! cargo run --release --example rd_sweep -- [out_dir]
//! ```

use uigc::codec::{EncodeOptions, Mode};
use uigc::eval::{fit_models, rd_sweep};
use uigc::synth::{desk_suite, DeskImageSpec};

fn main() -> anyhow::Result<()> {
    let spec = DeskImageSpec::default();
    let train: Vec<_> = desk_suite(&spec, 1000, 20).into_iter().map(|(_, img)| img).collect();
    let models = [16, 64, 256]
        .into_iter()
        .map(|k| fit_models(&train, k, 8, 18, 10, 0))
        .collect::<Result<Vec<_>, _>>()?;
    let images = desk_suite(&spec, 0, 20);

    let report = rd_sweep(&images, &models, &[Mode::NoLost, Mode::Uigc], &EncodeOptions::default());
    print!("{}", report.summary());
    let failed = report.rows.iter().filter(|r| r.status != "ok").count();
    println!("{} rows, {failed} failed", report.rows.len());
    if let Some(dir) = std::env::args().nth(1) {
        report.write_to(std::path::Path::new(&dir))?;
        println!("wrote {dir}/rows.csv, aggregates.csv, report.json");
    }
    Ok(())
}
