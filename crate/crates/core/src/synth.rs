//! Seeded synthetic sources: Voronoi token maps for the prior ablation and
//! shaded Voronoi colour images for codec sweeps.

use crate::token_core::TokenMap;
use crate::vq::ImageBuffer;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Parameters of a Voronoi token source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SyntheticSourceSpec {
    pub seed: u64,
    pub height: usize,
    pub width: usize,
    pub alphabet: usize,
    /// Number of Voronoi cells.
    pub regions: usize,
    /// Power-law exponent over the alphabet when drawing each cell's dominant
    /// token: 0 is uniform, larger values favour low indices.
    pub concentration: f64,
    /// Probability that a position is replaced by a uniformly drawn other token.
    pub flip: f64,
}

impl Default for SyntheticSourceSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            height: 36,
            width: 36,
            alphabet: 8,
            regions: 40,
            concentration: 0.0,
            flip: 0.05,
        }
    }
}

impl SyntheticSourceSpec {
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

/// Nearest-site label for every position of a `height x width` grid, ties to
/// the lowest site index.
fn voronoi_labels(sites: &[(usize, usize)], height: usize, width: usize) -> Vec<usize> {
    let mut labels = Vec::with_capacity(height * width);
    for r in 0..height {
        for c in 0..width {
            let mut best = (u64::MAX, 0);
            for (i, &(sr, sc)) in sites.iter().enumerate() {
                let dr = r.abs_diff(sr) as u64;
                let dc = c.abs_diff(sc) as u64;
                let d = dr * dr + dc * dc;
                if d < best.0 {
                    best = (d, i);
                }
            }
            labels.push(best.1);
        }
    }
    labels
}

fn random_sites(rng: &mut ChaCha8Rng, count: usize, height: usize, width: usize) -> Vec<(usize, usize)> {
    (0..count)
        .map(|_| (rng.gen_range(0..height), rng.gen_range(0..width)))
        .collect()
}

/// # Panics
///
/// If `regions` is 0, the alphabet is outside `2..=0xFFFD` or the grid is empty.
pub fn generate_synthetic(spec: &SyntheticSourceSpec) -> TokenMap {
    assert!(spec.regions >= 1, "need at least one region");
    assert!(spec.alphabet >= 2, "alphabet must be at least 2");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let sites = random_sites(&mut rng, spec.regions, spec.height, spec.width);
    let weights: Vec<f64> = (0..spec.alphabet)
        .map(|k| ((k + 1) as f64).powf(-spec.concentration))
        .collect();
    let pick = WeightedIndex::new(&weights).expect("positive weights");
    let dominant: Vec<u16> = (0..spec.regions).map(|_| pick.sample(&mut rng) as u16).collect();
    let labels = voronoi_labels(&sites, spec.height, spec.width);
    let k = spec.alphabet as u16;
    let tokens = labels
        .iter()
        .map(|&l| {
            let d = dominant[l];
            if rng.gen::<f64>() < spec.flip {
                let other = rng.gen_range(0..k - 1);
                if other >= d {
                    other + 1
                } else {
                    other
                }
            } else {
                d
            }
        })
        .collect();
    TokenMap::from_tokens(spec.height, spec.width, spec.alphabet, tokens).expect("tokens drawn inside the alphabet")
}

/// Parameters of a desk-suite test image: Voronoi regions, each a linear
/// colour ramp around a random base colour. No noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeskImageSpec {
    pub seed: u64,
    pub height: usize,
    pub width: usize,
    pub regions: usize,
    /// Largest per-axis ramp, in grey levels per pixel.
    pub slope: f64,
}

impl Default for DeskImageSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            height: 256,
            width: 256,
            regions: 12,
            slope: 0.4,
        }
    }
}

impl DeskImageSpec {
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

pub fn desk_image(spec: &DeskImageSpec) -> ImageBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let sites = random_sites(&mut rng, spec.regions.max(1), spec.height, spec.width);
    let shading: Vec<([f64; 3], f64, f64)> = sites
        .iter()
        .map(|_| {
            let base = [0; 3].map(|_: u8| rng.gen_range(40.0..215.0));
            let gy = rng.gen_range(-spec.slope..=spec.slope);
            let gx = rng.gen_range(-spec.slope..=spec.slope);
            (base, gy, gx)
        })
        .collect();
    let labels = voronoi_labels(&sites, spec.height, spec.width);
    let mut samples = Vec::with_capacity(labels.len() * 3);
    for (idx, &l) in labels.iter().enumerate() {
        let (base, gy, gx) = shading[l];
        let dr = (idx / spec.width) as f64 - sites[l].0 as f64;
        let dc = (idx % spec.width) as f64 - sites[l].1 as f64;
        for b in base {
            samples.push((b + gy * dr + gx * dc).round().clamp(0.0, 255.0) as u8);
        }
    }
    ImageBuffer::new(spec.height, spec.width, samples).expect("sample count matches")
}

/// `count` desk images with consecutive seeds starting at `first_seed`,
/// named `desk_<seed>`.
pub fn desk_suite(spec: &DeskImageSpec, first_seed: u64, count: usize) -> Vec<(String, ImageBuffer)> {
    (first_seed..first_seed + count as u64)
        .map(|seed| (format!("desk_{seed:03}"), desk_image(&spec.with_seed(seed))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_region_no_flip_is_constant() {
        let spec = SyntheticSourceSpec {
            regions: 1,
            flip: 0.0,
            ..Default::default()
        };
        let tokens = generate_synthetic(&spec).tokens().unwrap();
        assert!(tokens.iter().all(|&t| t == tokens[0]));
    }

    #[test]
    fn deterministic() {
        let spec = SyntheticSourceSpec::default().with_seed(7);
        assert_eq!(generate_synthetic(&spec), generate_synthetic(&spec));
        assert_ne!(generate_synthetic(&spec), generate_synthetic(&spec.with_seed(8)));
        let desk = DeskImageSpec { seed: 3, height: 40, width: 50, ..Default::default() };
        assert_eq!(desk_image(&desk), desk_image(&desk));
    }

    #[test]
    fn full_flip_never_keeps_dominant() {
        let spec = SyntheticSourceSpec {
            regions: 1,
            flip: 1.0,
            alphabet: 3,
            ..Default::default()
        };
        let clean = generate_synthetic(&SyntheticSourceSpec { flip: 0.0, ..spec });
        let d = clean.tokens().unwrap()[0];
        // Flip draws come after the site and dominant draws, so both maps
        // share their dominant token.
        assert!(generate_synthetic(&spec).tokens().unwrap().iter().all(|&t| t != d));
    }
}
