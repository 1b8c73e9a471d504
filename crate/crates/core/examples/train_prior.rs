//! Train an MST prior on synthetic token maps, save and reload it, and
//! print kept-token cross-entropy under different masks.
//!
//! ```text
//! cargo run --release --example train_prior -- [out.pri]
//! ```

use uigc::mask::{checkerboard_template, BinaryGrid};
use uigc::prior::{cross_entropy, train_prior, ContextModel, Prior, Variant};
use uigc::synth::{generate_synthetic, SyntheticSourceSpec};

fn main() -> anyhow::Result<()> {
    let spec = SyntheticSourceSpec::default();
    let maps: Vec<_> = (0..48).map(|s| generate_synthetic(&spec.with_seed(s))).collect();
    let test = generate_synthetic(&spec.with_seed(10_000));

    let untrained = ContextModel::new(Variant::Mst, spec.alphabet, 18)?;
    let model = train_prior(&maps, Variant::Mst, spec.alphabet, 18, 4, 0)?;
    println!("trained: {} context entries, id {:016x}", model.table_entries(), model.id());

    let bytes = model.to_bytes();
    let reloaded = ContextModel::from_bytes(&bytes)?;
    anyhow::ensure!(reloaded == model, "reload changed the model");
    println!("model file: {} bytes, reload ok", bytes.len());
    if let Some(path) = std::env::args().nth(1) {
        std::fs::write(&path, &bytes)?;
        println!("wrote {path}");
    }

    let all = BinaryGrid::ones(test.height(), test.width());
    let checker = checkerboard_template(test.height(), test.width());
    println!("bits/token, all kept:    untrained {:.4}  trained {:.4}", cross_entropy(&untrained, &test, &all)?, cross_entropy(&model, &test, &all)?);
    println!("bits/token, anchors only: untrained {:.4}  trained {:.4}", cross_entropy(&untrained, &test, &checker)?, cross_entropy(&model, &test, &checker)?);
    Ok(())
}
