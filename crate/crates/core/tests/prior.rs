use proptest::prelude::*;
use uigc::categorical::QuantizedCategorical;
use uigc::mask::BinaryGrid;
use uigc::prior::{
    cross_entropy, train_prior, ContextModel, MaskSchedule, Prior, PriorError, TrainOptions, Variant,
};
use uigc::token_core::{group_of, TokenMap};

fn unmasked() -> TrainOptions {
    TrainOptions {
        mask_trials: 1,
        seed: 0,
        schedule: MaskSchedule::Fixed(0.0),
    }
}

fn maps(k: usize) -> impl Strategy<Value = Vec<TokenMap>> {
    prop::collection::vec(
        (1usize..10, 1usize..10).prop_flat_map(move |(h, w)| {
            prop::collection::vec(0..k as u16, h * w)
                .prop_map(move |t| TokenMap::from_tokens(h, w, k, t).unwrap())
        }),
        0..6,
    )
}

/// Skewed token maps from a fixed linear congruential stream.
fn skewed_maps(n: usize, seed: u32) -> Vec<TokenMap> {
    let mut x = seed;
    (0..n)
        .map(|_| {
            let tokens = (0..12 * 14)
                .map(|_| {
                    x = x.wrapping_mul(1_664_525).wrapping_add(1_013_904_223);
                    let u = x >> 24;
                    match u {
                        0..=150 => 0,
                        151..=210 => 1,
                        211..=240 => 2,
                        _ => 3 + (u % 3) as u16,
                    }
                })
                .collect();
            TokenMap::from_tokens(12, 14, 6, tokens).unwrap()
        })
        .collect()
}

#[test]
fn order0_cross_entropy_matches_plug_in_oracle() {
    let train = skewed_maps(20, 7);
    let test = skewed_maps(3, 99);
    let mut model = ContextModel::new(Variant::Mst, 6, 18).unwrap();
    model.train(&train, &unmasked()).unwrap();
    model.prune(0);
    assert_eq!(model.table_entries(), 4, "only the per-stage order-0 tables remain");

    // Oracle: tally per-group counts straight from the training maps, turn
    // them into the smoothed quantized distribution and average code lengths.
    let mut counts = [[0u32; 6]; 4];
    for m in &train {
        for p in m.positions() {
            counts[group_of(p.row, p.col).value() as usize][m.get(p).token().unwrap() as usize] += 1;
        }
    }
    let dists: Vec<QuantizedCategorical> =
        counts.iter().map(|c| QuantizedCategorical::from_counts(c).unwrap()).collect();
    for m in &test {
        let mut bits = 0.0;
        for p in m.positions() {
            let d = &dists[group_of(p.row, p.col).value() as usize];
            bits += -(d.freq(m.get(p).token().unwrap() as usize) as f64 / 32768.0).log2();
        }
        let expected = bits / (m.height() * m.width()) as f64;
        let got = cross_entropy(&model, m, &BinaryGrid::ones(m.height(), m.width())).unwrap();
        assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
    }
}

#[test]
fn zero_maps_give_uniform() {
    let model = train_prior(&[], Variant::Mst, 16, 18, 4, 0).unwrap();
    let map = TokenMap::filled(4, 4, 16, 3).unwrap();
    assert_eq!(cross_entropy(&model, &map, &BinaryGrid::ones(4, 4)).unwrap(), 4.0);
}

#[test]
fn alphabet_mismatch_rejected() {
    let a = TokenMap::filled(2, 2, 4, 0).unwrap();
    let b = TokenMap::filled(2, 2, 5, 0).unwrap();
    assert!(matches!(
        train_prior(&[a, b], Variant::Mst, 4, 18, 1, 0),
        Err(PriorError::AlphabetMismatch { .. })
    ));
}

#[test]
fn training_is_deterministic_and_seed_sensitive() {
    let train = skewed_maps(5, 1);
    let a = train_prior(&train, Variant::Mst, 6, 18, 4, 11).unwrap();
    let b = train_prior(&train, Variant::Mst, 6, 18, 4, 11).unwrap();
    let c = train_prior(&train, Variant::Mst, 6, 18, 4, 12).unwrap();
    assert_eq!(a.to_bytes(), b.to_bytes());
    assert_ne!(a.id(), c.id());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn adding_a_constant_map_raises_its_mass(corpus in maps(4), t in 0u16..4, rt in any::<bool>()) {
        let variant = if rt { Variant::Rt } else { Variant::Mst };
        let opts = TrainOptions { mask_trials: 2, seed: 5, schedule: MaskSchedule::Uniform };
        let mass = |maps: &[TokenMap]| -> u64 {
            let mut m = ContextModel::new(variant, 4, 18).unwrap();
            m.train(maps, &opts).unwrap();
            (0..4u8)
                .filter_map(|s| m.order0(s))
                .map(|c| QuantizedCategorical::from_counts(&c.dense(4)).unwrap().freq(t as usize) as u64)
                .sum()
        };
        let mut bigger = corpus.clone();
        bigger.push(TokenMap::filled(4, 4, 4, t).unwrap());
        prop_assert!(mass(&bigger) > mass(&corpus));
    }

    #[test]
    fn predictions_are_valid_everywhere(corpus in maps(5), probe in maps(5)) {
        let model = train_prior(&corpus, Variant::Mst, 5, 4, 2, 3).unwrap();
        for m in &probe {
            let order = uigc::token_core::coding_order(m.height(), m.width(), 4).unwrap();
            for (e, w) in order.iter() {
                let d = model.predict(m, e.pos, w);
                prop_assert_eq!(d.frequencies().iter().sum::<u32>(), 32768);
                prop_assert!(d.frequencies().iter().all(|&f| f >= 1));
            }
        }
    }

    #[test]
    fn save_load_is_canonical(corpus in maps(3), rt in any::<bool>()) {
        let variant = if rt { Variant::Rt } else { Variant::Mst };
        let model = train_prior(&corpus, variant, 3, 6, 2, 0).unwrap();
        let bytes = model.to_bytes();
        let back = ContextModel::from_bytes(&bytes).unwrap();
        prop_assert_eq!(back.id(), model.id());
        prop_assert_eq!(back.to_bytes(), bytes);
        prop_assert_eq!(back, model);
    }
}
