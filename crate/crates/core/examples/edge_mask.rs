//! Build the keep-mask for a desk image: Sobel edges, 2x transport
//! downsampling, zlib region payload and the final mask.
//!
//! ```text
//! cargo run --release --example edge_mask -- [seed]
//! ```

use uigc::mask::{
    checkerboard_template, compose_mask, downsample_region, extract_edges, pack_region, unpack_region,
    upsample_region, BinaryGrid, EdgeParams,
};
use uigc::synth::{desk_image, DeskImageSpec};
use uigc::vq::center_crop;

fn show(name: &str, grid: &BinaryGrid) {
    println!("{name} ({}x{}, {} set):", grid.height(), grid.width(), grid.count_ones());
    for r in 0..grid.height() {
        let line: String = (0..grid.width()).map(|c| if grid.get(r, c) { '#' } else { '.' }).collect();
        println!("  {line}");
    }
}

fn main() -> anyhow::Result<()> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0);
    let image = desk_image(&DeskImageSpec {
        seed,
        height: 160,
        width: 192,
        regions: 6,
        ..Default::default()
    });
    let (cropped, _) = center_crop(&image, 8)?;
    let region = extract_edges(&cropped, EdgeParams::default(), 8)?;
    show("preserved region R", &region);

    let low = downsample_region(&region);
    let payload = pack_region(&low);
    let restored = unpack_region(&payload, low.height(), low.width())?;
    anyhow::ensure!(restored == low, "region payload round trip failed");
    println!("R_L {}x{} -> {} byte zlib payload", low.height(), low.width(), payload.len());

    let high = upsample_region(&low, region.height(), region.width())?;
    anyhow::ensure!(high.is_superset_of(&region), "transport lost preserved cells");
    let mask = compose_mask(&checkerboard_template(region.height(), region.width()), &high, None)?;
    show("keep-mask m", &mask);
    println!(
        "{} of {} tokens kept, {} regenerated",
        mask.count_ones(),
        mask.bits().len(),
        mask.bits().len() - mask.count_ones()
    );
    Ok(())
}
