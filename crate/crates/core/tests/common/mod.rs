#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::cell::RefCell;
use uigc::categorical::QuantizedCategorical;
use uigc::eval::fit_models;
use uigc::prior::{ContextModel, Prior, Variant};
use uigc::synth::{desk_image, desk_suite, DeskImageSpec};
use uigc::token_core::{Position, TokenMap, WindowRect};
use uigc::{Codebook, ImageBuffer};

/// Codebook and MST prior fitted on a handful of small desk images.
pub fn small_models(k: usize) -> (Codebook, ContextModel) {
    let spec = DeskImageSpec {
        height: 96,
        width: 96,
        regions: 6,
        ..Default::default()
    };
    let train: Vec<_> = desk_suite(&spec, 900, 8).into_iter().map(|(_, i)| i).collect();
    fit_models(&train, k, 8, 18, 8, 1).expect("fit small models")
}

/// Desk image of random size and region count, optionally with pixel noise.
pub fn fuzz_image(seed: u64) -> ImageBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xF00D);
    let spec = DeskImageSpec {
        seed,
        height: rng.gen_range(16..=150),
        width: rng.gen_range(16..=150),
        regions: rng.gen_range(1..=10),
        slope: rng.gen_range(0.0..1.0),
    };
    let mut img = desk_image(&spec);
    if seed % 5 == 0 {
        let amp = rng.gen_range(1..=30);
        for r in 0..img.height() {
            for c in 0..img.width() {
                let p = img.pixel(r, c).map(|v| (v as i32 + rng.gen_range(-amp..=amp)).clamp(0, 255) as u8);
                img.set_pixel(r, c, p);
            }
        }
    }
    img
}

/// Records every position a prior is asked about.
pub struct Recording<'a, P: Prior> {
    pub inner: &'a P,
    pub calls: RefCell<Vec<Position>>,
}

impl<'a, P: Prior> Recording<'a, P> {
    pub fn new(inner: &'a P) -> Self {
        Self {
            inner,
            calls: RefCell::new(Vec::new()),
        }
    }
}

impl<P: Prior> Prior for Recording<'_, P> {
    fn alphabet(&self) -> usize {
        self.inner.alphabet()
    }
    fn window(&self) -> usize {
        self.inner.window()
    }
    fn id(&self) -> u64 {
        self.inner.id()
    }
    fn variant(&self) -> Variant {
        self.inner.variant()
    }
    fn predict(&self, map: &TokenMap, pos: Position, window: &WindowRect) -> QuantizedCategorical {
        self.calls.borrow_mut().push(pos);
        self.inner.predict(map, pos, window)
    }
}
