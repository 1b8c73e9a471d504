mod common;

use common::{fuzz_image, small_models, Recording};
use uigc::codec::{
    decode_detailed, encode_detailed, generate_masked, roundtrip_check, stats, CodecError, ContainerHeader,
    EncodeOptions, Mode, HEADER_LEN,
};
use uigc::mask::BinaryGrid;
use uigc::prior::{ContextModel, Prior, Variant};
use uigc::token_core::coding_order;
use uigc::ImageBuffer;

#[test]
fn round_trip_across_modes_and_variants() {
    let (cb, mst) = small_models(16);
    let rt = {
        let maps: Vec<_> = (0..4).map(|s| uigc::vq::tokenize(&fuzz_image(s), &cb).unwrap()).collect();
        uigc::prior::train_prior(&maps, Variant::Rt, 16, 18, 2, 0).unwrap()
    };
    for seed in 0..6 {
        let img = fuzz_image(100 + seed);
        for mode in [Mode::NoLost, Mode::Uigc] {
            for prior in [&mst, &rt] {
                let r = roundtrip_check(&img, &cb, prior, mode, &EncodeOptions::default()).unwrap();
                assert_eq!(r.kept_exactness, 1.0);
                assert_eq!(r.masked_agreement, 1.0);
                if mode == Mode::NoLost {
                    assert_eq!(r.rate.masked_tokens, 0);
                }
            }
        }
    }
}

#[test]
fn decoder_queries_prior_once_per_position_in_order() {
    let (cb, prior) = small_models(16);
    let img = fuzz_image(7);
    for mode in [Mode::NoLost, Mode::Uigc] {
        let enc = encode_detailed(&img, &cb, &prior, mode, &EncodeOptions::default()).unwrap();
        let rec = Recording::new(&prior);
        decode_detailed(&enc.container, &cb, &rec).unwrap();
        let (h, w) = (enc.tokens.height(), enc.tokens.width());
        let expected: Vec<_> = coding_order(h, w, 18).unwrap().entries.iter().map(|e| e.pos).collect();
        assert_eq!(*rec.calls.borrow(), expected);
    }
}

#[test]
fn masked_tokens_match_encoder_replay() {
    let (cb, prior) = small_models(16);
    let img = fuzz_image(3);
    let enc = encode_detailed(&img, &cb, &prior, Mode::Uigc, &EncodeOptions::default()).unwrap();
    let dec = decode_detailed(&enc.container, &cb, &prior).unwrap();
    assert_eq!(dec.mask, enc.mask);
    assert_eq!(dec.tokens, generate_masked(&prior, &enc.tokens, &enc.mask).unwrap());
}

#[test]
fn roi_cells_are_kept() {
    let (cb, prior) = small_models(16);
    let img = ImageBuffer::filled(96, 96, [90, 40, 200]);
    let mut roi = BinaryGrid::zeros(12, 12);
    for c in 3..9 {
        roi.set(5, c, true);
    }
    let opts = EncodeOptions {
        roi: Some(roi.clone()),
        roi_keeps_edges: false,
        ..Default::default()
    };
    let enc = encode_detailed(&img, &cb, &prior, Mode::Roi, &opts).unwrap();
    assert!(enc.mask.is_superset_of(&roi));
    let dec = decode_detailed(&enc.container, &cb, &prior).unwrap();
    assert_eq!(dec.mask, enc.mask);
    assert_eq!(dec.header.mode, Mode::Roi);
}

#[test]
fn header_checks() {
    let (cb, prior) = small_models(16);
    let img = fuzz_image(11);
    let container = encode_detailed(&img, &cb, &prior, Mode::Uigc, &EncodeOptions::default())
        .unwrap()
        .container;

    // A flipped prior-id byte is reported before the payload is touched,
    // even when the payload itself is garbage.
    let mut bad = container.clone();
    bad[34] ^= 0x80;
    for b in bad[HEADER_LEN..].iter_mut() {
        *b = 0xA5;
    }
    assert!(matches!(
        decode_detailed(&bad, &cb, &prior),
        Err(CodecError::IdMismatch { what: "prior id", .. })
    ));

    let mut bad = container.clone();
    bad[0] = b'X';
    assert!(matches!(stats(&bad), Err(CodecError::CorruptContainer(_))));

    let truncated = &container[..container.len() - 1];
    assert!(matches!(decode_detailed(truncated, &cb, &prior), Err(CodecError::CorruptContainer(_))));

    let mut bad = container.clone();
    bad[53] ^= 1;
    assert!(matches!(decode_detailed(&bad, &cb, &prior), Err(CodecError::CorruptContainer(_))));

    let other = ContextModel::new(Variant::Mst, 16, 18).unwrap();
    assert!(matches!(
        decode_detailed(&container, &cb, &other),
        Err(CodecError::IdMismatch { what: "prior id", .. })
    ));

    let h = ContainerHeader::parse(&container).unwrap();
    assert_eq!(h.prior_id, prior.id());
    assert_eq!(h.codebook_id, cb.id());
}

#[test]
fn cut_token_payload_underruns() {
    let (cb, prior) = small_models(16);
    let img = ImageBuffer::filled(160, 160, [0; 3]);
    let mut noisy = img.clone();
    for r in 0..160 {
        for c in 0..160 {
            noisy.set_pixel(r, c, [((r * 37 + c * 91) % 256) as u8, (r * c % 251) as u8, (c * 13 % 256) as u8]);
        }
    }
    let enc = encode_detailed(&noisy, &cb, &prior, Mode::NoLost, &EncodeOptions::default()).unwrap();
    assert!(enc.header.token_len > 16, "payload too short to cut");
    let mut header = enc.header;
    header.token_len = 8;
    let mut cut = header.to_bytes().to_vec();
    cut.extend_from_slice(&enc.container[HEADER_LEN..HEADER_LEN + 8]);
    assert!(matches!(decode_detailed(&cut, &cb, &prior), Err(CodecError::PayloadUnderrun)));

    header.token_len = 4;
    let mut short = header.to_bytes().to_vec();
    short.extend_from_slice(&enc.container[HEADER_LEN..HEADER_LEN + 4]);
    assert!(matches!(decode_detailed(&short, &cb, &prior), Err(CodecError::CorruptContainer(_))));
}

#[test]
fn loss_is_confined_to_dropped_patches() {
    let (cb, prior) = small_models(16);
    for seed in 20..26 {
        let img = fuzz_image(seed);
        let opts = EncodeOptions::default();
        let full = decode_detailed(
            &encode_detailed(&img, &cb, &prior, Mode::NoLost, &opts).unwrap().container,
            &cb,
            &prior,
        )
        .unwrap();
        let lossy = decode_detailed(
            &encode_detailed(&img, &cb, &prior, Mode::Uigc, &opts).unwrap().container,
            &cb,
            &prior,
        )
        .unwrap();
        for r in 0..full.image.height() {
            for c in 0..full.image.width() {
                if lossy.mask.get(r / 8, c / 8) {
                    assert_eq!(full.image.pixel(r, c), lossy.image.pixel(r, c), "seed {seed} pixel ({r},{c})");
                }
            }
        }
    }
}
