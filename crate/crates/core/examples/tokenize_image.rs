//! Train a patch codebook on desk images, tokenize one, paint it back and
//! report PSNR.
//!
//! ```text
//! cargo run --release --example tokenize_image -- [K] [out.ppm]
//! ```

use uigc::pnm::write_ppm;
use uigc::synth::{desk_suite, DeskImageSpec};
use uigc::vq::{center_crop, detokenize, psnr, tokenize, train_codebook};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let k: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(64);
    let out = args.next();

    let spec = DeskImageSpec {
        height: 180,
        width: 180,
        ..Default::default()
    };
    let train: Vec<_> = desk_suite(&spec, 100, 8).into_iter().map(|(_, img)| img).collect();
    let codebook = train_codebook(&train, k, 8, 10, 0)?;
    println!("codebook: K={} P={} id={:016x}", codebook.len(), codebook.patch(), codebook.id());

    let (_, image) = desk_suite(&spec, 0, 1).remove(0);
    let tokens = tokenize(&image, &codebook)?;
    let (cropped, geometry) = center_crop(&image, codebook.patch())?;
    println!(
        "{}x{} image -> {}x{} tokens (crop offset {},{})",
        image.height(),
        image.width(),
        tokens.height(),
        tokens.width(),
        geometry.top,
        geometry.left
    );
    let painted = detokenize(&tokens, &codebook)?;
    println!("PSNR of the tokenized image: {:.2} dB", psnr(&painted, &cropped)?);

    let mut used: Vec<u16> = tokens.tokens().unwrap_or_default();
    used.sort_unstable();
    used.dedup();
    println!("{} of {} codewords used", used.len(), codebook.len());

    if let Some(path) = out {
        write_ppm(&path, &painted)?;
        println!("wrote {path}");
    }
    Ok(())
}
