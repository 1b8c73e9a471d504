//! Regenerate the golden vectors in `vectors/`: range coder payloads, a
//! codebook, a prior, a source image and its containers. The
//! `golden_vectors` test checks them byte for byte.
//!
//! ```text
//! cargo run --release --example golden_vectors -- [dir]
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::path::PathBuf;
use uigc::codec::{decode_image, encode_image, EncodeOptions, Mode};
use uigc::eval::fit_models;
use uigc::pnm::{encode_ppm, write_ppm};
use uigc::range_coder::RangeEncoder;
use uigc::synth::{desk_suite, DeskImageSpec};
use uigc::QuantizedCategorical;

#[derive(Serialize)]
struct CoderCase {
    name: String,
    freqs: Vec<u32>,
    symbols: Vec<usize>,
    payload_hex: String,
}

fn case(name: &str, freqs: Vec<u32>, symbols: Vec<usize>) -> anyhow::Result<CoderCase> {
    let dist = QuantizedCategorical::from_frequencies(&freqs)?;
    let mut enc = RangeEncoder::new();
    for &s in &symbols {
        enc.encode(s, &dist);
    }
    Ok(CoderCase {
        name: name.into(),
        freqs,
        symbols,
        payload_hex: hex::encode(enc.finish()),
    })
}

fn main() -> anyhow::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/vectors")));
    std::fs::create_dir_all(&dir)?;

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let uniform = QuantizedCategorical::uniform(16)?.frequencies();
    let skewed = QuantizedCategorical::from_counts(&[5000, 20, 3, 1])?.frequencies();
    let wide = QuantizedCategorical::from_counts(&(0..256).map(|i| (i * 7 % 31) as u32).collect::<Vec<_>>())?.frequencies();
    let cases = vec![
        case("empty", uniform.clone(), vec![])?,
        case("uniform16", uniform, (0..200).map(|_| rng.gen_range(0..16)).collect())?,
        case("skewed_run", skewed.clone(), vec![0; 3000])?,
        case(
            "skewed_mixed",
            skewed,
            (0..3000).map(|i| if i % 113 == 0 { 3 } else if i % 7 == 0 { 1 } else { 0 }).collect(),
        )?,
        case("wide256", wide, (0..500).map(|_| rng.gen_range(0..256)).collect())?,
    ];
    std::fs::write(dir.join("coder.json"), serde_json::to_string_pretty(&cases)? + "\n")?;

    let spec = DeskImageSpec {
        height: 72,
        width: 76,
        regions: 5,
        ..Default::default()
    };
    let train: Vec<_> = desk_suite(&spec, 500, 6).into_iter().map(|(_, img)| img).collect();
    let (codebook, prior) = fit_models(&train, 16, 8, 18, 8, 7)?;
    std::fs::write(dir.join("codebook.cbk"), codebook.to_bytes())?;
    std::fs::write(dir.join("prior.pri"), prior.to_bytes())?;

    let (_, source) = desk_suite(&spec, 42, 1).remove(0);
    std::fs::write(dir.join("source.ppm"), encode_ppm(&source))?;
    let opts = EncodeOptions::default();
    for mode in [Mode::NoLost, Mode::Uigc] {
        let container = encode_image(&source, &codebook, &prior, mode, &opts)?;
        let (decoded, _) = decode_image(&container, &codebook, &prior)?;
        std::fs::write(dir.join(format!("{}.uigc", mode.name())), &container)?;
        write_ppm(dir.join(format!("{}_decoded.ppm", mode.name())), &decoded)?;
        println!("{} container: {} bytes", mode.name(), container.len());
    }
    println!("codebook id {:016x}, prior id {:016x}", codebook.id(), uigc::Prior::id(&prior));
    println!("vectors written to {}", dir.display());
    Ok(())
}
