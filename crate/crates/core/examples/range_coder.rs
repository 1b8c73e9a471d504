//! Range code a skewed iid source and compare the payload with its ideal
//! code length.
//!
//! ```text
//! cargo run --release --example range_coder -- [symbols]
//! ```

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use uigc::range_coder::{RangeDecoder, RangeEncoder};
use uigc::QuantizedCategorical;

fn main() -> anyhow::Result<()> {
    let n: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(100_000);
    let dist = QuantizedCategorical::from_counts(&[900, 50, 30, 10, 5, 3, 1, 0])?;
    let freqs = dist.frequencies();
    println!("frequencies (sum 2^15): {freqs:?}");

    let sampler = WeightedIndex::new(&freqs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let symbols: Vec<usize> = (0..n).map(|_| sampler.sample(&mut rng)).collect();

    let mut encoder = RangeEncoder::new();
    for &s in &symbols {
        encoder.encode(s, &dist);
    }
    let payload = encoder.finish();

    let ideal: f64 = symbols.iter().map(|&s| dist.cost_bits(s)).sum();
    let actual = payload.len() as f64 * 8.0;
    println!("{n} symbols: {} bytes", payload.len());
    println!(
        "ideal {:.5} bits/symbol, coded {:.5} bits/symbol ({:+.4}%)",
        ideal / n as f64,
        actual / n as f64,
        100.0 * (actual - ideal) / ideal
    );

    let mut decoder = RangeDecoder::new(&payload)?;
    for (i, &s) in symbols.iter().enumerate() {
        anyhow::ensure!(decoder.decode(&dist)? == s, "mismatch at symbol {i}");
    }
    println!("decoded all symbols exactly");
    Ok(())
}
