//! Full pipeline on a desk image: fit models, encode in no-lost and uigc
//! modes, decode, and compare rate and quality.
//!
//! ```text
//! cargo run --release --example encode_decode -- [image.ppm]
//! ```

use uigc::codec::{decode_image, encode_image, roundtrip_check, stats, EncodeOptions, Mode};
use uigc::eval::fit_models;
use uigc::pnm::read_ppm;
use uigc::synth::{desk_suite, DeskImageSpec};

fn main() -> anyhow::Result<()> {
    let spec = DeskImageSpec::default();
    let train: Vec<_> = desk_suite(&spec, 1000, 20).into_iter().map(|(_, img)| img).collect();
    let (codebook, prior) = fit_models(&train, 64, 8, 18, 10, 0)?;

    let image = match std::env::args().nth(1) {
        Some(path) => read_ppm(path)?,
        None => desk_suite(&spec, 0, 1).remove(0).1,
    };
    let opts = EncodeOptions::default();
    for mode in [Mode::NoLost, Mode::Uigc] {
        let container = encode_image(&image, &codebook, &prior, mode, &opts)?;
        let rate = stats(&container)?;
        let (decoded, _) = decode_image(&container, &codebook, &prior)?;
        let report = roundtrip_check(&image, &codebook, &prior, mode, &opts)?;
        println!(
            "{:<6} {:>5} bytes  {:.5} bpp  coded {:>4}  regenerated {:>4}  region {:>4} bits  PSNR {:.2} dB  regenerated-token accuracy {:.1}%",
            mode.name(),
            container.len(),
            rate.bpp,
            rate.coded_symbols,
            rate.masked_tokens,
            rate.region_bits,
            report.psnr,
            report.masked_accuracy * 100.0
        );
        assert_eq!(decoded.height() * decoded.width(), rate.pixels as usize);
    }
    Ok(())
}
