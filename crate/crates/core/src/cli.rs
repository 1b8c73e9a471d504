//! The `uigc` command line. Every subcommand is a thin shell over library
//! calls; see [`cli_main`].

use crate::codec::{decode_image, encode_image, roundtrip_check, stats, CodecError, EncodeOptions, Mode};
use crate::eval::{ablation_mst_vs_rt, rd_sweep, AblationConfig};
use crate::mask::{BinaryGrid, EdgeParams, MaskError};
use crate::pnm::{decode_pgm, encode_pgm, read_ppm, write_ppm, GrayImage, PnmError};
use crate::prior::{ContextModel, MaskSchedule, Prior, PriorError, TrainOptions, Variant, DEFAULT_MASK_TRIALS};
use crate::synth::{desk_suite, generate_synthetic, DeskImageSpec, SyntheticSourceSpec};
use crate::token_core::{TokenError, TokenMap};
use crate::vq::{tokenize, train_codebook, Codebook, ImageBuffer, VqError};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Pnm(#[from] PnmError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Vq(#[from] VqError),
    #[error(transparent)]
    Prior(#[from] PriorError),
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error(transparent)]
    Token(#[from] TokenError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Parser)]
#[command(name = "uigc", version, about = "Token-map image codec with prior-driven regeneration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Nolost,
    Uigc,
    Roi,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Nolost => Mode::NoLost,
            ModeArg::Uigc => Mode::Uigc,
            ModeArg::Roi => Mode::Roi,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    Mst,
    Rt,
}

#[derive(Debug, Args)]
struct Models {
    /// Codebook file written by train-codebook.
    #[arg(long)]
    codebook: PathBuf,
    /// Prior model file written by train-prior.
    #[arg(long)]
    prior: PathBuf,
}

#[derive(Debug, Args)]
struct CodingArgs {
    #[arg(long, value_enum, default_value = "uigc")]
    mode: ModeArg,
    /// PGM (P5) at token resolution; nonzero samples mark the ROI.
    #[arg(long)]
    roi: Option<PathBuf>,
    /// In roi mode, keep only the ROI and skip edge preservation.
    #[arg(long)]
    roi_only: bool,
    #[arg(long, default_value_t = 18)]
    window: usize,
    #[arg(long, default_value_t = 90.0)]
    edge_percentile: f64,
    #[arg(long, default_value_t = 0.05)]
    edge_cell_threshold: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a patch k-means codebook on PPM images.
    TrainCodebook {
        #[arg(required = true)]
        images: Vec<PathBuf>,
        #[arg(long, default_value_t = 16)]
        k: usize,
        #[arg(long, default_value_t = 8)]
        patch: usize,
        #[arg(long, default_value_t = 10)]
        iterations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a context prior on PGM token maps, or on PPM images with --codebook.
    TrainPrior {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        codebook: Option<PathBuf>,
        /// Alphabet size for PGM token maps; taken from the codebook otherwise.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_enum, default_value = "mst")]
        variant: VariantArg,
        #[arg(long, default_value_t = 18)]
        window: usize,
        #[arg(long, default_value_t = DEFAULT_MASK_TRIALS)]
        mask_trials: usize,
        /// Keep at most this many context entries above order 0.
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compress a PPM image into a .uigc container.
    Encode {
        input: PathBuf,
        #[command(flatten)]
        models: Models,
        #[command(flatten)]
        coding: CodingArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct a PPM image from a container.
    Decode {
        input: PathBuf,
        #[command(flatten)]
        models: Models,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the rate breakdown of a container as JSON.
    Stats { input: PathBuf },
    /// Encode and decode in memory and report exactness, agreement and rate.
    Roundtrip {
        input: PathBuf,
        #[command(flatten)]
        models: Models,
        #[command(flatten)]
        coding: CodingArgs,
    },
    /// Write a synthetic Voronoi token map as PGM.
    Synth {
        #[arg(long, default_value_t = 36)]
        height: usize,
        #[arg(long, default_value_t = 36)]
        width: usize,
        #[arg(long, default_value_t = 8)]
        k: usize,
        #[arg(long, default_value_t = 40)]
        regions: usize,
        #[arg(long, default_value_t = 0.0)]
        concentration: f64,
        #[arg(long, default_value_t = 0.05)]
        flip: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// MST versus raster-order priors on synthetic token maps.
    Ablation {
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        /// First seed; seeds run consecutively from here.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4096)]
        budget: usize,
        #[arg(long, default_value_t = 48)]
        train_maps: usize,
        #[arg(long, default_value_t = 8)]
        test_maps: usize,
        #[arg(long, default_value_t = 8)]
        k: usize,
        #[arg(long, default_value_t = 40)]
        regions: usize,
        #[arg(long, default_value_t = 0.05)]
        flip: f64,
        #[arg(long, default_value_t = 18)]
        window: usize,
        /// Directory for ablation.csv and ablation.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rate-distortion sweep over images x (codebook, prior) pairs x modes.
    RdSweep {
        /// PPM images; with --desk, generated desk images are used instead.
        images: Vec<PathBuf>,
        /// Repeatable; paired in order with --prior.
        #[arg(long, required = true)]
        codebook: Vec<PathBuf>,
        #[arg(long, required = true)]
        prior: Vec<PathBuf>,
        #[arg(long, value_enum, value_delimiter = ',', default_values = ["nolost", "uigc"])]
        mode: Vec<ModeArg>,
        /// Use this many generated desk images (seeds 0..N).
        #[arg(long)]
        desk: Option<usize>,
        #[arg(long, default_value_t = 18)]
        window: usize,
        #[arg(long, default_value_t = 90.0)]
        edge_percentile: f64,
        #[arg(long, default_value_t = 0.05)]
        edge_cell_threshold: f64,
        /// Directory for rows.csv, aggregates.csv and report.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_codebook(path: &Path) -> Result<Codebook, CliError> {
    Ok(Codebook::from_bytes(&read(path)?)?)
}

fn load_prior(path: &Path) -> Result<ContextModel, CliError> {
    Ok(ContextModel::from_bytes(&read(path)?)?)
}

/// Reads a PGM token-resolution ROI map; nonzero samples are ROI.
pub fn read_roi(path: &Path) -> Result<BinaryGrid, CliError> {
    let g = decode_pgm(&read(path)?)?;
    Ok(BinaryGrid::from_bits(g.height, g.width, g.samples.iter().map(|&v| v != 0).collect()))
}

/// Token map as 8-bit PGM, one sample per token. Needs K <= 256.
pub fn token_map_to_pgm(map: &TokenMap) -> Result<Vec<u8>, CliError> {
    let tokens = map
        .tokens()
        .ok_or_else(|| CliError::Usage("token map contains MASK cells".into()))?;
    if map.alphabet() > 256 {
        return Err(CliError::Prior(PriorError::InvalidConfig(format!(
            "alphabet {} does not fit an 8-bit PGM",
            map.alphabet()
        ))));
    }
    Ok(encode_pgm(&GrayImage {
        height: map.height(),
        width: map.width(),
        samples: tokens.iter().map(|&t| t as u8).collect(),
    }))
}

pub fn token_map_from_pgm(bytes: &[u8], alphabet: usize) -> Result<TokenMap, CliError> {
    let g = decode_pgm(bytes)?;
    let tokens = g.samples.iter().map(|&v| v as u16).collect();
    Ok(TokenMap::from_tokens(g.height, g.width, alphabet, tokens)?)
}

fn encode_options(coding: &CodingArgs) -> Result<EncodeOptions, CliError> {
    let roi = coding.roi.as_deref().map(read_roi).transpose()?;
    Ok(EncodeOptions {
        edges: EdgeParams {
            percentile: coding.edge_percentile,
            cell_threshold: coding.edge_cell_threshold,
        },
        window: coding.window,
        roi,
        roi_keeps_edges: !coding.roi_only,
    })
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let emit = |out: &mut dyn Write, text: String| {
        // A closed stdout is not a data error worth reporting.
        let _ = out.write_all(text.as_bytes());
    };
    match cli.command {
        Command::TrainCodebook {
            images,
            k,
            patch,
            iterations,
            seed,
            out: path,
        } => {
            let imgs = images.iter().map(read_ppm).collect::<Result<Vec<_>, _>>()?;
            let cb = train_codebook(&imgs, k, patch, iterations, seed)?;
            write(&path, &cb.to_bytes())?;
            emit(out, format!("codebook K={} P={} id={:016x}\n", cb.len(), cb.patch(), cb.id()));
        }
        Command::TrainPrior {
            inputs,
            codebook,
            k,
            variant,
            window,
            mask_trials,
            budget,
            seed,
            out: path,
        } => {
            let codebook = codebook.as_deref().map(load_codebook).transpose()?;
            let alphabet = match (&codebook, k) {
                (Some(cb), Some(k)) if k != cb.len() => {
                    return Err(CliError::Usage(format!("--k {k} disagrees with codebook K={}", cb.len())))
                }
                (Some(cb), _) => cb.len(),
                (None, Some(k)) => k,
                (None, None) => return Err(CliError::Usage("train-prior needs --k or --codebook".into())),
            };
            let mut maps = Vec::with_capacity(inputs.len());
            for input in &inputs {
                let bytes = read(input)?;
                if bytes.starts_with(b"P6") {
                    let cb = codebook
                        .as_ref()
                        .ok_or_else(|| CliError::Usage(format!("{}: PPM input needs --codebook", input.display())))?;
                    maps.push(tokenize(&crate::pnm::decode_ppm(&bytes)?, cb)?);
                } else {
                    maps.push(token_map_from_pgm(&bytes, alphabet)?);
                }
            }
            let variant = match variant {
                VariantArg::Mst => Variant::Mst,
                VariantArg::Rt => Variant::Rt,
            };
            let mut model = ContextModel::new(variant, alphabet, window)?;
            model.train(
                &maps,
                &TrainOptions {
                    mask_trials,
                    seed,
                    schedule: MaskSchedule::Uniform,
                },
            )?;
            if let Some(b) = budget {
                model.prune(b);
            }
            write(&path, &model.to_bytes())?;
            emit(
                out,
                format!("prior K={alphabet} S={window} entries={} id={:016x}\n", model.table_entries(), model.id()),
            );
        }
        Command::Encode {
            input,
            models,
            coding,
            out: path,
        } => {
            let image = read_ppm(&input)?;
            let (cb, prior) = (load_codebook(&models.codebook)?, load_prior(&models.prior)?);
            let container = encode_image(&image, &cb, &prior, coding.mode.into(), &encode_options(&coding)?)?;
            write(&path, &container)?;
            let rate = stats(&container)?;
            emit(out, format!("{} bytes, {:.5} bpp\n", container.len(), rate.bpp));
        }
        Command::Decode { input, models, out: path } => {
            let container = read(&input)?;
            let (cb, prior) = (load_codebook(&models.codebook)?, load_prior(&models.prior)?);
            let (image, _) = decode_image(&container, &cb, &prior)?;
            write_ppm(&path, &image)?;
            emit(out, format!("{}x{} image written\n", image.width(), image.height()));
        }
        Command::Stats { input } => {
            let rate = stats(&read(&input)?)?;
            emit(out, serde_json::to_string_pretty(&rate).expect("rate serializes") + "\n");
        }
        Command::Roundtrip { input, models, coding } => {
            let image = read_ppm(&input)?;
            let (cb, prior) = (load_codebook(&models.codebook)?, load_prior(&models.prior)?);
            let r = roundtrip_check(&image, &cb, &prior, coding.mode.into(), &encode_options(&coding)?)?;
            emit(
                out,
                format!(
                    "mode: {}\ntoken exactness: {:.2}%\nmasked agreement: {:.2}%\nmasked accuracy: {:.2}%\npsnr_db: {:.3}\nbpp: {:.6}\ncoded symbols: {}\nmasked tokens: {}\n",
                    r.mode.name(),
                    r.kept_exactness * 100.0,
                    r.masked_agreement * 100.0,
                    r.masked_accuracy * 100.0,
                    r.psnr,
                    r.rate.bpp,
                    r.rate.coded_symbols,
                    r.rate.masked_tokens
                ),
            );
        }
        Command::Synth {
            height,
            width,
            k,
            regions,
            concentration,
            flip,
            seed,
            out: path,
        } => {
            if regions == 0 || k < 2 || height == 0 || width == 0 || !(0.0..=1.0).contains(&flip) {
                return Err(CliError::Usage("synth needs regions >= 1, k >= 2, non-empty grid, flip in [0,1]".into()));
            }
            let map = generate_synthetic(&SyntheticSourceSpec {
                seed,
                height,
                width,
                alphabet: k,
                regions,
                concentration,
                flip,
            });
            write(&path, &token_map_to_pgm(&map)?)?;
        }
        Command::Ablation {
            seeds,
            seed,
            budget,
            train_maps,
            test_maps,
            k,
            regions,
            flip,
            window,
            out: dir,
        } => {
            let config = AblationConfig {
                source: SyntheticSourceSpec {
                    alphabet: k,
                    regions,
                    flip,
                    ..Default::default()
                },
                train_maps,
                test_maps,
                table_budget: budget,
                window,
                ..Default::default()
            };
            let seeds: Vec<u64> = (seed..seed + seeds).collect();
            let report = ablation_mst_vs_rt(&config, &seeds)?;
            if let Some(dir) = dir {
                std::fs::create_dir_all(&dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
                write(&dir.join("ablation.csv"), report.to_csv().as_bytes())?;
                write(&dir.join("ablation.json"), report.to_json().as_bytes())?;
            }
            emit(out, report.to_csv());
            emit(
                out,
                format!(
                    "median masked accuracy: mst {:.4} rt {:.4}\nmedian kept bits/token: mst {:.4} rt {:.4}\n",
                    report.mst_median_accuracy, report.rt_median_accuracy, report.mst_median_bits, report.rt_median_bits
                ),
            );
        }
        Command::RdSweep {
            images,
            codebook,
            prior,
            mode,
            desk,
            window,
            edge_percentile,
            edge_cell_threshold,
            out: dir,
        } => {
            if codebook.len() != prior.len() {
                return Err(CliError::Usage("--codebook and --prior must be given the same number of times".into()));
            }
            let inputs: Vec<(String, ImageBuffer)> = match desk {
                Some(n) => desk_suite(&DeskImageSpec::default(), 0, n),
                None if images.is_empty() => return Err(CliError::Usage("rd-sweep needs images or --desk".into())),
                None => images
                    .iter()
                    .map(|p| Ok((p.display().to_string(), read_ppm(p)?)))
                    .collect::<Result<_, CliError>>()?,
            };
            let models = codebook
                .iter()
                .zip(&prior)
                .map(|(c, p)| Ok((load_codebook(c)?, load_prior(p)?)))
                .collect::<Result<Vec<_>, CliError>>()?;
            let modes: Vec<Mode> = mode.into_iter().map(Mode::from).collect();
            let opts = EncodeOptions {
                edges: EdgeParams {
                    percentile: edge_percentile,
                    cell_threshold: edge_cell_threshold,
                },
                window,
                ..Default::default()
            };
            let report = rd_sweep(&inputs, &models, &modes, &opts);
            if let Some(dir) = dir {
                report.write_to(&dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
            }
            emit(out, report.rows_csv());
            emit(out, report.summary());
        }
    }
    Ok(())
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code: 0 success, 1 usage error, 2 data error.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let stdout = std::io::stdout();
    match run(cli, &mut stdout.lock()) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Usage(_) = e {
                eprintln!("{}", <Cli as clap::CommandFactory>::command().render_usage());
            }
            e.exit_code()
        }
    }
}
