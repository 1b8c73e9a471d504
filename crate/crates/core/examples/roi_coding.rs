//! Region-of-interest coding: force-keep a centre rectangle of tokens and
//! compare against plain uigc and an ROI-only mask.
//!
//! ```text
//! cargo run --release --example roi_coding
//! ```

use uigc::codec::{encode_detailed, roundtrip_check, EncodeOptions, Mode};
use uigc::eval::fit_models;
use uigc::mask::BinaryGrid;
use uigc::synth::{desk_suite, DeskImageSpec};

fn main() -> anyhow::Result<()> {
    let spec = DeskImageSpec::default();
    let train: Vec<_> = desk_suite(&spec, 1000, 20).into_iter().map(|(_, img)| img).collect();
    let (codebook, prior) = fit_models(&train, 64, 8, 18, 10, 0)?;
    let (_, image) = desk_suite(&spec, 3, 1).remove(0);

    let (rows, cols) = (image.height() / 8, image.width() / 8);
    let mut roi = BinaryGrid::zeros(rows, cols);
    for r in rows / 4..3 * rows / 4 {
        for c in cols / 4..3 * cols / 4 {
            roi.set(r, c, true);
        }
    }

    let runs = [
        ("uigc", Mode::Uigc, EncodeOptions::default()),
        (
            "roi+edges",
            Mode::Roi,
            EncodeOptions {
                roi: Some(roi.clone()),
                ..Default::default()
            },
        ),
        (
            "roi only",
            Mode::Roi,
            EncodeOptions {
                roi: Some(roi.clone()),
                roi_keeps_edges: false,
                ..Default::default()
            },
        ),
    ];
    for (name, mode, opts) in runs {
        let enc = encode_detailed(&image, &codebook, &prior, mode, &opts)?;
        let report = roundtrip_check(&image, &codebook, &prior, mode, &opts)?;
        let roi_kept = mode != Mode::Roi || enc.mask.is_superset_of(&roi);
        println!(
            "{name:<10} {:.5} bpp  kept {:>4}/{}  PSNR {:.2} dB  ROI fully kept: {roi_kept}",
            report.rate.bpp,
            enc.mask.count_ones(),
            rows * cols,
            report.psnr
        );
    }
    Ok(())
}
