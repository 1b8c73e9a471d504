use uigc::codec::{EncodeOptions, Mode};
use uigc::eval::{ablation_mst_vs_rt, median, rd_sweep, AblationConfig};
use uigc::prior::{ContextModel, Variant};
use uigc::synth::{desk_suite, generate_synthetic, DeskImageSpec, SyntheticSourceSpec};
use uigc::vq::train_codebook;

#[test]
fn full_flip_marginal_is_uniform() {
    let spec = SyntheticSourceSpec {
        seed: 17,
        height: 250,
        width: 400,
        alphabet: 4,
        regions: 2000,
        concentration: 0.0,
        flip: 1.0,
    };
    let tokens = generate_synthetic(&spec).tokens().unwrap();
    let mut hist = [0usize; 4];
    for t in tokens {
        hist[t as usize] += 1;
    }
    for (t, &n) in hist.iter().enumerate() {
        let p = n as f64 / 100_000.0;
        assert!((p - 0.25).abs() <= 0.03 * 0.25, "token {t}: {p}");
    }
}

#[test]
fn pure_noise_accuracy_is_chance() {
    let k = 8usize;
    let config = AblationConfig {
        source: SyntheticSourceSpec {
            regions: 1,
            alphabet: k,
            flip: (k - 1) as f64 / k as f64,
            ..Default::default()
        },
        train_maps: 16,
        test_maps: 8,
        ..Default::default()
    };
    let report = ablation_mst_vs_rt(&config, &[0, 1, 2]).unwrap();
    let dropped_per_seed = (config.source.height * config.source.width / 2 * config.test_maps) as f64;
    let p = 1.0 / k as f64;
    let stderr = (p * (1.0 - p) / dropped_per_seed).sqrt();
    for row in &report.rows {
        assert!((row.masked_accuracy - p).abs() <= 3.0 * stderr, "{row:?} vs {p} +- {}", 3.0 * stderr);
    }
}

#[test]
fn ablation_report_is_reproducible() {
    let config = AblationConfig {
        train_maps: 6,
        test_maps: 2,
        ..Default::default()
    };
    let a = ablation_mst_vs_rt(&config, &[4, 5]).unwrap();
    let b = ablation_mst_vs_rt(&config, &[4, 5]).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.rows.len(), 4);
    let mst: Vec<f64> = a.rows.iter().filter(|r| r.variant == Variant::Mst).map(|r| r.masked_accuracy).collect();
    assert_eq!(a.mst_median_accuracy, median(&mst));
}

#[test]
fn sweep_shape_rates_and_failures() {
    let spec = DeskImageSpec {
        height: 96,
        width: 96,
        regions: 8,
        slope: 0.8,
        ..Default::default()
    };
    let train: Vec<_> = desk_suite(&spec, 300, 6).into_iter().map(|(_, i)| i).collect();
    let small = train_codebook(&train, 16, 8, 5, 0).unwrap();
    let large = train_codebook(&train, 256, 8, 5, 0).unwrap();
    let models = vec![
        (small.clone(), ContextModel::new(Variant::Mst, 16, 18).unwrap()),
        (large, ContextModel::new(Variant::Mst, 256, 18).unwrap()),
        (small, ContextModel::new(Variant::Mst, 256, 18).unwrap()),
    ];
    let images = desk_suite(&spec, 0, 3);
    let modes = [Mode::NoLost, Mode::Uigc];
    let report = rd_sweep(&images, &models, &modes, &EncodeOptions::default());
    assert_eq!(report.rows.len(), images.len() * models.len() * modes.len());

    for chunk in report.rows.chunks(models.len() * modes.len()) {
        let (k16_nolost, k16_uigc, k256_nolost, broken) = (&chunk[0], &chunk[1], &chunk[2], &chunk[4]);
        assert!(k16_nolost.bpp.unwrap() < k256_nolost.bpp.unwrap());
        assert!(k16_uigc.coded_symbols.unwrap() < k16_nolost.coded_symbols.unwrap());
        assert!(broken.status.starts_with("failed"), "{broken:?}");
        assert!(broken.bpp.is_none());
    }

    for agg in &report.aggregates {
        let bpps: Vec<f64> = report
            .rows
            .iter()
            .filter(|r| r.k == agg.k && r.mode == agg.mode && r.status == "ok")
            .filter_map(|r| r.bpp)
            .collect();
        assert_eq!(agg.rows_ok, bpps.len());
        if !bpps.is_empty() {
            assert_eq!(agg.median_bpp, median(&bpps));
        }
    }
    let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), report.rows.len());
}
