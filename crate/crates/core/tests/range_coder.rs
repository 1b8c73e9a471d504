use proptest::prelude::*;
use uigc::categorical::{QuantizedCategorical, TOTAL};
use uigc::range_coder::{RangeDecoder, RangeEncoder, FLUSH_BYTES};

fn dist_and_symbols() -> impl Strategy<Value = (Vec<u32>, Vec<usize>)> {
    (2usize..300)
        .prop_flat_map(|k| (prop::collection::vec(0u32..5000, k), prop::collection::vec(0..k, 0..600)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn round_trip_and_rate_bound((counts, symbols) in dist_and_symbols()) {
        let dist = QuantizedCategorical::from_counts(&counts).unwrap();
        let mut enc = RangeEncoder::new();
        for &s in &symbols {
            enc.encode(s, &dist);
        }
        let payload = enc.finish();
        let ideal: f64 = symbols.iter().map(|&s| dist.cost_bits(s)).sum();
        let slack = 64.0 + symbols.len() as f64 * 1e-6;
        prop_assert!((payload.len() * 8) as f64 <= ideal + slack, "{} bits vs ideal {ideal}", payload.len() * 8);
        let mut dec = RangeDecoder::new(&payload).unwrap();
        for &s in &symbols {
            prop_assert_eq!(dec.decode(&dist).unwrap(), s);
        }
        prop_assert!(dec.position() <= payload.len());
    }

    #[test]
    fn varying_distributions_round_trip(
        steps in prop::collection::vec((prop::collection::vec(0u32..100, 2..20), any::<prop::sample::Index>()), 1..400)
    ) {
        let dists: Vec<QuantizedCategorical> =
            steps.iter().map(|(c, _)| QuantizedCategorical::from_counts(c).unwrap()).collect();
        let symbols: Vec<usize> = steps.iter().zip(&dists).map(|((_, i), d)| i.index(d.alphabet())).collect();
        let mut enc = RangeEncoder::new();
        for (d, &s) in dists.iter().zip(&symbols) {
            enc.encode(s, d);
        }
        let payload = enc.finish();
        let mut dec = RangeDecoder::new(&payload).unwrap();
        for (d, &s) in dists.iter().zip(&symbols) {
            prop_assert_eq!(dec.decode(d).unwrap(), s);
        }
    }

    #[test]
    fn quantized_distributions_are_valid(counts in prop::collection::vec(0u32..1_000_000, 2..600)) {
        let d = QuantizedCategorical::from_counts(&counts).unwrap();
        let f = d.frequencies();
        prop_assert_eq!(f.iter().sum::<u32>(), TOTAL);
        prop_assert!(f.iter().all(|&x| x >= 1));
        for s in 0..d.alphabet() {
            prop_assert!(d.cum(s) < d.cum(s + 1));
        }
    }

    #[test]
    fn three_symbol_apportionment_matches_oracle(a in 0u64..3000, b in 0u64..3000, c in 0u64..3000) {
        let got = QuantizedCategorical::from_counts(&[a as u32, b as u32, c as u32]).unwrap().frequencies();
        prop_assert_eq!(got, apportion_oracle(&[a + 1, b + 1, c + 1]));
    }
}

/// Among the floor/ceil roundings of the exact quotas that sum to TOTAL, the
/// one with the smallest squared error; ties go to the candidate whose
/// rounded-up symbols have the lowest indices. Quotas stay exact by scaling
/// everything by the weight sum.
fn apportion_oracle(weights: &[u64]) -> Vec<u32> {
    let total = TOTAL as u64;
    let sum: u64 = weights.iter().sum();
    let scaled_quota: Vec<u64> = weights.iter().map(|w| total * w).collect();
    let floors: Vec<u64> = scaled_quota.iter().map(|q| q / sum).collect();
    let mut best: Option<(u128, Vec<usize>, Vec<u64>)> = None;
    for bits in 0u32..(1 << weights.len()) {
        let cand: Vec<u64> = floors
            .iter()
            .enumerate()
            .map(|(i, f)| f + ((bits >> i) & 1) as u64)
            .collect();
        if cand.iter().sum::<u64>() != total {
            continue;
        }
        let err: u128 = cand
            .iter()
            .zip(&scaled_quota)
            .map(|(&x, &q)| {
                let d = (x * sum) as i128 - q as i128;
                (d * d) as u128
            })
            .sum();
        let ups: Vec<usize> = (0..weights.len()).filter(|i| (bits >> i) & 1 == 1).collect();
        let better = match &best {
            None => true,
            Some((e, u, _)) => err < *e || (err == *e && ups < *u),
        };
        if better {
            best = Some((err, ups, cand));
        }
    }
    best.expect("some rounding sums to TOTAL").2.into_iter().map(|x| x as u32).collect()
}

#[test]
fn apportionment_oracle_agrees_with_worked_example() {
    assert_eq!(apportion_oracle(&[4, 2, 1]), vec![18725, 9362, 4681]);
}

#[test]
fn flush_is_the_whole_empty_payload() {
    assert_eq!(RangeEncoder::new().finish().len(), FLUSH_BYTES);
}
