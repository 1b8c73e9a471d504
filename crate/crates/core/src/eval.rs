//! Evaluation harness: the MST-versus-RT ablation on synthetic token maps
//! and rate-distortion sweeps over images, codebooks and modes.

use crate::codec::{decode_detailed, encode_detailed, stats, CodecError, EncodeOptions, Mode};
use crate::codec::generate_masked;
use crate::mask::checkerboard_template;
use crate::prior::{cross_entropy, train_prior, ContextModel, Prior, PriorError, Variant};
use crate::synth::{generate_synthetic, SyntheticSourceSpec};
use crate::token_core::TokenMap;
use crate::vq::{center_crop, psnr, tokenize, train_codebook, Codebook, ImageBuffer, VqError};
use serde::{Serialize, Serializer};
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Median of `values`; the mean of the two middle values for even counts and
/// NaN when empty.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn finite_or_inf<S: Serializer>(value: &f64, s: S) -> Result<S::Ok, S::Error> {
    if value.is_finite() {
        s.serialize_f64(*value)
    } else if value.is_nan() {
        s.serialize_str("nan")
    } else if *value > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

fn opt_finite<S: Serializer>(value: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match value {
        Some(v) => finite_or_inf(v, s),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AblationConfig {
    /// Source parameters; the seed field is overwritten per map.
    pub source: SyntheticSourceSpec,
    pub train_maps: usize,
    pub test_maps: usize,
    /// Context entries kept above order 0, identical for both variants.
    pub table_budget: usize,
    pub mask_trials: usize,
    pub window: usize,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self {
            source: SyntheticSourceSpec::default(),
            train_maps: 48,
            test_maps: 8,
            table_budget: 4096,
            mask_trials: crate::prior::DEFAULT_MASK_TRIALS,
            window: crate::prior::DEFAULT_WINDOW,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AblationRow {
    pub seed: u64,
    pub variant: Variant,
    pub kept_bits_per_token: f64,
    pub masked_accuracy: f64,
    pub table_entries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationReport {
    pub rows: Vec<AblationRow>,
    pub mst_median_accuracy: f64,
    pub rt_median_accuracy: f64,
    pub mst_median_bits: f64,
    pub rt_median_bits: f64,
}

impl AblationReport {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).expect("in-memory CSV");
        }
        String::from_utf8(w.into_inner().expect("in-memory CSV")).expect("CSV is UTF-8")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn map_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index as u64)
}

/// Train and test maps for one ablation seed.
pub fn ablation_corpus(config: &AblationConfig, seed: u64) -> (Vec<TokenMap>, Vec<TokenMap>) {
    let all: Vec<TokenMap> = (0..config.train_maps + config.test_maps)
        .map(|i| generate_synthetic(&config.source.with_seed(map_seed(seed, i))))
        .collect();
    let test = all[config.train_maps..].to_vec();
    let mut train = all;
    train.truncate(config.train_maps);
    (train, test)
}

/// Kept-token bits/token and dropped-token argmax accuracy of `prior` on
/// `maps` under the checkerboard mask.
pub fn score_checkerboard<P: Prior + ?Sized>(prior: &P, maps: &[TokenMap]) -> Result<(f64, f64), PriorError> {
    let (mut bits, mut kept, mut correct, mut dropped) = (0.0, 0usize, 0usize, 0usize);
    for map in maps {
        let mask = checkerboard_template(map.height(), map.width());
        let n_kept = mask.count_ones();
        bits += cross_entropy(prior, map, &mask)? * n_kept as f64;
        kept += n_kept;
        let generated = generate_masked(prior, map, &mask).map_err(|e| match e {
            CodecError::Prior(p) => p,
            other => PriorError::InvalidConfig(other.to_string()),
        })?;
        for (i, &keep) in mask.bits().iter().enumerate() {
            if !keep {
                dropped += 1;
                correct += (generated.cells()[i] == map.cells()[i]) as usize;
            }
        }
    }
    let bpt = if kept == 0 { 0.0 } else { bits / kept as f64 };
    let acc = if dropped == 0 { 1.0 } else { correct as f64 / dropped as f64 };
    Ok((bpt, acc))
}

pub fn ablation_mst_vs_rt(config: &AblationConfig, seeds: &[u64]) -> Result<AblationReport, PriorError> {
    if seeds.is_empty() {
        return Err(PriorError::InvalidConfig("ablation needs at least one seed".into()));
    }
    let mut rows = Vec::with_capacity(seeds.len() * 2);
    for &seed in seeds {
        let (train, test) = ablation_corpus(config, seed);
        for variant in [Variant::Mst, Variant::Rt] {
            let mut prior = train_prior(
                &train,
                variant,
                config.source.alphabet,
                config.window,
                config.mask_trials,
                seed,
            )?;
            prior.prune(config.table_budget);
            let (bits, acc) = score_checkerboard(&prior, &test)?;
            rows.push(AblationRow {
                seed,
                variant,
                kept_bits_per_token: bits,
                masked_accuracy: acc,
                table_entries: prior.table_entries(),
            });
        }
    }
    let collect = |v: Variant, f: fn(&AblationRow) -> f64| -> Vec<f64> {
        rows.iter().filter(|r| r.variant == v).map(f).collect()
    };
    Ok(AblationReport {
        mst_median_accuracy: median(&collect(Variant::Mst, |r| r.masked_accuracy)),
        rt_median_accuracy: median(&collect(Variant::Rt, |r| r.masked_accuracy)),
        mst_median_bits: median(&collect(Variant::Mst, |r| r.kept_bits_per_token)),
        rt_median_bits: median(&collect(Variant::Rt, |r| r.kept_bits_per_token)),
        rows,
    })
}

/// One (image, codebook, mode) cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub file: String,
    pub k: usize,
    pub mode: Mode,
    /// `ok`, or the error that failed this row.
    pub status: String,
    pub bpp: Option<f64>,
    /// Signal PSNR against the cropped source, dB. Not a perceptual metric.
    #[serde(serialize_with = "opt_finite")]
    pub psnr_db: Option<f64>,
    pub coded_symbols: Option<u64>,
    pub masked_count: Option<u64>,
    /// Token payload bits over coded symbols.
    pub bits_per_token: Option<f64>,
    /// Fraction of regenerated tokens equal to the source tokens.
    pub masked_token_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepAggregate {
    pub k: usize,
    pub mode: Mode,
    pub rows_ok: usize,
    pub median_bpp: f64,
    #[serde(serialize_with = "finite_or_inf")]
    pub median_psnr_db: f64,
    pub median_bits_per_token: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub rows: Vec<SweepRow>,
    pub aggregates: Vec<SweepAggregate>,
}

impl EvalReport {
    pub fn from_rows(rows: Vec<SweepRow>) -> Self {
        let mut groups: BTreeMap<(usize, u8), (Mode, Vec<&SweepRow>)> = BTreeMap::new();
        for row in &rows {
            groups
                .entry((row.k, row.mode.code()))
                .or_insert_with(|| (row.mode, Vec::new()))
                .1
                .push(row);
        }
        let aggregates = groups
            .into_iter()
            .map(|((k, _), (mode, members))| {
                let ok: Vec<&&SweepRow> = members.iter().filter(|r| r.status == "ok").collect();
                let pick = |f: fn(&SweepRow) -> Option<f64>| -> Vec<f64> { ok.iter().filter_map(|r| f(r)).collect() };
                SweepAggregate {
                    k,
                    mode,
                    rows_ok: ok.len(),
                    median_bpp: median(&pick(|r| r.bpp)),
                    median_psnr_db: median(&pick(|r| r.psnr_db)),
                    median_bits_per_token: median(&pick(|r| r.bits_per_token)),
                }
            })
            .collect();
        Self { rows, aggregates }
    }

    pub fn rows_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).expect("in-memory CSV");
        }
        String::from_utf8(w.into_inner().expect("in-memory CSV")).expect("CSV is UTF-8")
    }

    pub fn aggregates_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for agg in &self.aggregates {
            w.serialize(agg).expect("in-memory CSV");
        }
        String::from_utf8(w.into_inner().expect("in-memory CSV")).expect("CSV is UTF-8")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Writes `rows.csv`, `aggregates.csv` and `report.json` into `dir`.
    pub fn write_to(&self, dir: &std::path::Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("rows.csv"), self.rows_csv())?;
        std::fs::write(dir.join("aggregates.csv"), self.aggregates_csv())?;
        std::fs::write(dir.join("report.json"), self.to_json())
    }

    /// Plain-text table of the aggregates.
    pub fn summary(&self) -> String {
        let mut out = String::from("k     mode    ok  median_bpp  median_psnr_db  bits/token\n");
        for a in &self.aggregates {
            let _ = writeln!(
                out,
                "{:<5} {:<7} {:<3} {:<11.4} {:<15.2} {:.4}",
                a.k,
                a.mode.name(),
                a.rows_ok,
                a.median_bpp,
                a.median_psnr_db,
                a.median_bits_per_token
            );
        }
        out
    }
}

fn sweep_cell<P: Prior + ?Sized>(
    image: &ImageBuffer,
    codebook: &Codebook,
    prior: &P,
    mode: Mode,
    opts: &EncodeOptions,
) -> Result<(f64, f64, u64, u64, f64, f64), CodecError> {
    let enc = encode_detailed(image, codebook, prior, mode, opts)?;
    let dec = decode_detailed(&enc.container, codebook, prior)?;
    let rate = stats(&enc.container)?;
    let (cropped, _) = center_crop(image, codebook.patch())?;
    let quality = psnr(&dec.image, &cropped)?;
    let (mut dropped, mut correct) = (0usize, 0usize);
    for (i, &keep) in enc.mask.bits().iter().enumerate() {
        if !keep {
            dropped += 1;
            correct += (enc.tokens.cells()[i] == dec.tokens.cells()[i]) as usize;
        }
    }
    let bpt = if rate.coded_symbols == 0 {
        0.0
    } else {
        rate.token_bits as f64 / rate.coded_symbols as f64
    };
    let acc = if dropped == 0 { 1.0 } else { correct as f64 / dropped as f64 };
    Ok((rate.bpp, quality, rate.coded_symbols, rate.masked_tokens, bpt, acc))
}

/// Full cross product of `images` x `models` x `modes`, in that nesting
/// order. A failing cell is recorded with its error instead of aborting.
pub fn rd_sweep<P: Prior>(
    images: &[(String, ImageBuffer)],
    models: &[(Codebook, P)],
    modes: &[Mode],
    opts: &EncodeOptions,
) -> EvalReport {
    let mut rows = Vec::with_capacity(images.len() * models.len() * modes.len());
    for (file, image) in images {
        for (codebook, prior) in models {
            for &mode in modes {
                let mut row = SweepRow {
                    file: file.clone(),
                    k: codebook.len(),
                    mode,
                    status: "ok".into(),
                    bpp: None,
                    psnr_db: None,
                    coded_symbols: None,
                    masked_count: None,
                    bits_per_token: None,
                    masked_token_accuracy: None,
                };
                match sweep_cell(image, codebook, prior, mode, opts) {
                    Ok((bpp, q, coded, masked, bpt, acc)) => {
                        row.bpp = Some(bpp);
                        row.psnr_db = Some(q);
                        row.coded_symbols = Some(coded);
                        row.masked_count = Some(masked);
                        row.bits_per_token = Some(bpt);
                        row.masked_token_accuracy = Some(acc);
                    }
                    Err(e) => row.status = format!("failed: {e}"),
                }
                rows.push(row);
            }
        }
    }
    EvalReport::from_rows(rows)
}

/// Trains a codebook on `images` and an MST prior on their token maps.
pub fn fit_models(
    images: &[ImageBuffer],
    k: usize,
    patch: usize,
    window: usize,
    iterations: usize,
    seed: u64,
) -> Result<(Codebook, ContextModel), CodecError> {
    let codebook = train_codebook(images, k, patch, iterations, seed)?;
    let maps = images
        .iter()
        .map(|img| tokenize(img, &codebook))
        .collect::<Result<Vec<_>, VqError>>()?;
    let prior = train_prior(&maps, Variant::Mst, k, window, crate::prior::DEFAULT_MASK_TRIALS, seed)?;
    Ok((codebook, prior))
}
