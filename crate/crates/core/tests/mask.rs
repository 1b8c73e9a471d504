use proptest::prelude::*;
use uigc::mask::{
    checkerboard_template, compose_mask, downsample_region, extract_edges, pack_region, unpack_region,
    upsample_region, BinaryGrid, EdgeParams, MaskError,
};
use uigc::token_core::group_of;
use uigc::ImageBuffer;

fn grid() -> impl Strategy<Value = BinaryGrid> {
    (1usize..48, 1usize..48, 0.0f64..1.0).prop_flat_map(|(h, w, p)| {
        prop::collection::vec(prop::bool::weighted(p), h * w).prop_map(move |bits| BinaryGrid::from_bits(h, w, bits))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn transport_covers_the_region(region in grid()) {
        let low = downsample_region(&region);
        prop_assert_eq!(low.dims(), (region.height().div_ceil(2), region.width().div_ceil(2)));
        let high = upsample_region(&low, region.height(), region.width()).unwrap();
        prop_assert!(high.is_superset_of(&region));
        prop_assert_eq!(downsample_region(&high), low.clone());
        let restored = unpack_region(&pack_region(&low), low.height(), low.width()).unwrap();
        prop_assert_eq!(restored, low);
    }

    #[test]
    fn composed_mask_contains_template_and_region(region in grid()) {
        let (h, w) = region.dims();
        let template = checkerboard_template(h, w);
        let m = compose_mask(&template, &region, None).unwrap();
        prop_assert!(m.is_superset_of(&template) && m.is_superset_of(&region));
        prop_assert_eq!(m, template.or(&region).unwrap());
    }

    #[test]
    fn wrong_dims_fail_to_unpack(region in grid()) {
        let low = downsample_region(&region);
        let bytes = pack_region(&low);
        let err = unpack_region(&bytes, low.height() + 8, low.width());
        prop_assert!(err.is_err());
    }
}

#[test]
fn template_is_anchor_groups_exhaustively() {
    for h in 1..=64 {
        for w in 1..=64 {
            let t = checkerboard_template(h, w);
            assert_eq!(t.count_ones(), (h * w).div_ceil(2));
            for r in 0..h {
                for c in 0..w {
                    assert_eq!(t.get(r, c), group_of(r, c).is_anchor());
                }
            }
        }
    }
}

#[test]
fn roi_is_always_kept() {
    let template = checkerboard_template(6, 6);
    let mut roi = BinaryGrid::zeros(6, 6);
    roi.set(2, 3, true);
    let m = compose_mask(&template, &BinaryGrid::zeros(6, 6), Some(&roi)).unwrap();
    assert!(m.get(2, 3));
    assert!(matches!(
        compose_mask(&template, &BinaryGrid::zeros(5, 6), None),
        Err(MaskError::DimensionMismatch(..))
    ));
}

#[test]
fn uniform_noise_keeps_about_a_tenth_of_pixels_hot() {
    // Roughly 10% of pixels sit above the 90th percentile, spread evenly, so
    // half a cell is never reached while a single pixel almost always is.
    let mut img = ImageBuffer::filled(64, 64, [0; 3]);
    let mut x: u32 = 1;
    for r in 0..64 {
        for c in 0..64 {
            x = x.wrapping_mul(1_103_515_245).wrapping_add(12345);
            let v = (x >> 16) as u8;
            img.set_pixel(r, c, [v, v, v]);
        }
    }
    let strict = EdgeParams {
        percentile: 90.0,
        cell_threshold: 0.5,
    };
    assert_eq!(extract_edges(&img, strict, 8).unwrap().count_ones(), 0);
    let loose = EdgeParams {
        percentile: 90.0,
        cell_threshold: 1.0 / 64.0,
    };
    assert!(extract_edges(&img, loose, 8).unwrap().count_ones() >= 60);
}
