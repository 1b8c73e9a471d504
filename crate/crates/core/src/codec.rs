//! End-to-end encoder and decoder, and the `.uigc` container.
//!
//! Container layout, all integers big-endian:
//!
//! ```text
//! offset size field
//!      0    5 magic "UIGC1"
//!      5    1 mode (0 no-lost, 1 uigc, 2 roi)
//!      6    2 alphabet size K
//!      8    1 patch size P
//!      9    1 window size S
//!     10    4 original height H
//!     14    4 original width W
//!     18    2 crop offset, rows
//!     20    2 crop offset, cols
//!     22    2 token rows h
//!     24    2 token cols w
//!     26    8 codebook id
//!     34    8 prior id
//!     42    4 region payload length
//!     46    4 token payload length
//!     50    4 coded symbol count
//!     54      region payload (zlib), then token payload (range coded)
//! ```

use crate::categorical::QuantizedCategorical;
use crate::mask::{
    checkerboard_template, compose_mask, downsample_region, extract_edges, pack_region, unpack_region,
    upsample_region, BinaryGrid, EdgeParams, MaskError,
};
use crate::prior::{apply_mask, Prior, PriorError};
use crate::range_coder::{CoderError, RangeDecoder, RangeEncoder, FLUSH_BYTES};
use crate::token_core::{scan_order, Cell, TokenError, TokenMap};
use crate::vq::{center_crop, detokenize, psnr, tokenize, Codebook, CropGeometry, ImageBuffer, VqError};
use serde::Serialize;
use thiserror::Error;

pub const CONTAINER_MAGIC: &[u8; 5] = b"UIGC1";
pub const HEADER_LEN: usize = 54;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodecError {
    #[error("image {height}x{width} is smaller than one {patch}x{patch} patch")]
    ImageTooSmall { height: usize, width: usize, patch: usize },
    #[error("{what} mismatch: container/options have {expected}, supplied {found}")]
    IdMismatch {
        what: &'static str,
        expected: String,
        found: String,
    },
    #[error("ROI grid is {found:?}, token map is {expected:?}")]
    RoiDimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("ROI mode requires an ROI grid")]
    RoiMissing,
    #[error("corrupt container: {0}")]
    CorruptContainer(String),
    #[error("token payload ended early")]
    PayloadUnderrun,
    #[error(transparent)]
    Vq(VqError),
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error(transparent)]
    Prior(#[from] PriorError),
    #[error(transparent)]
    Token(#[from] TokenError),
}

impl From<VqError> for CodecError {
    fn from(e: VqError) -> Self {
        match e {
            VqError::ImageTooSmall { height, width, patch } => CodecError::ImageTooSmall { height, width, patch },
            other => CodecError::Vq(other),
        }
    }
}

impl From<CoderError> for CodecError {
    fn from(_: CoderError) -> Self {
        CodecError::PayloadUnderrun
    }
}

fn mismatch(what: &'static str, expected: impl ToString, found: impl ToString) -> CodecError {
    CodecError::IdMismatch {
        what,
        expected: expected.to_string(),
        found: found.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Every token is entropy coded.
    NoLost,
    /// Checkerboard template plus preserved edges; the rest is regenerated.
    Uigc,
    /// Like `Uigc`, with a caller-supplied region of interest force-kept.
    Roi,
}

impl Mode {
    pub fn code(self) -> u8 {
        match self {
            Mode::NoLost => 0,
            Mode::Uigc => 1,
            Mode::Roi => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Mode::NoLost),
            1 => Some(Mode::Uigc),
            2 => Some(Mode::Roi),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::NoLost => "nolost",
            Mode::Uigc => "uigc",
            Mode::Roi => "roi",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nolost" => Ok(Mode::NoLost),
            "uigc" => Ok(Mode::Uigc),
            "roi" => Ok(Mode::Roi),
            other => Err(format!("unknown mode '{other}' (expected nolost, uigc or roi)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodeOptions {
    pub edges: EdgeParams,
    pub window: usize,
    /// Token-resolution region of interest; required in ROI mode.
    pub roi: Option<BinaryGrid>,
    /// In ROI mode, also preserve detected edges outside the ROI.
    pub roi_keeps_edges: bool,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        Self {
            edges: EdgeParams::default(),
            window: crate::prior::DEFAULT_WINDOW,
            roi: None,
            roi_keeps_edges: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContainerHeader {
    pub mode: Mode,
    pub alphabet: u16,
    pub patch: u8,
    pub window: u8,
    pub height: u32,
    pub width: u32,
    pub crop_top: u16,
    pub crop_left: u16,
    pub token_rows: u16,
    pub token_cols: u16,
    pub codebook_id: u64,
    pub prior_id: u64,
    pub region_len: u32,
    pub token_len: u32,
    pub coded_symbols: u32,
}

impl ContainerHeader {
    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[0..5].copy_from_slice(CONTAINER_MAGIC);
        out[5] = self.mode.code();
        out[6..8].copy_from_slice(&self.alphabet.to_be_bytes());
        out[8] = self.patch;
        out[9] = self.window;
        out[10..14].copy_from_slice(&self.height.to_be_bytes());
        out[14..18].copy_from_slice(&self.width.to_be_bytes());
        out[18..20].copy_from_slice(&self.crop_top.to_be_bytes());
        out[20..22].copy_from_slice(&self.crop_left.to_be_bytes());
        out[22..24].copy_from_slice(&self.token_rows.to_be_bytes());
        out[24..26].copy_from_slice(&self.token_cols.to_be_bytes());
        out[26..34].copy_from_slice(&self.codebook_id.to_be_bytes());
        out[34..42].copy_from_slice(&self.prior_id.to_be_bytes());
        out[42..46].copy_from_slice(&self.region_len.to_be_bytes());
        out[46..50].copy_from_slice(&self.token_len.to_be_bytes());
        out[50..54].copy_from_slice(&self.coded_symbols.to_be_bytes());
        out
    }

    /// Parses and validates the header against the container length.
    pub fn parse(container: &[u8]) -> Result<Self, CodecError> {
        let bad = |m: &str| CodecError::CorruptContainer(m.to_string());
        if container.len() < HEADER_LEN {
            return Err(bad("shorter than the header"));
        }
        if &container[..5] != CONTAINER_MAGIC {
            return Err(bad("bad magic"));
        }
        let be16 = |o: usize| u16::from_be_bytes([container[o], container[o + 1]]);
        let be32 = |o: usize| u32::from_be_bytes(container[o..o + 4].try_into().expect("4 bytes"));
        let be64 = |o: usize| u64::from_be_bytes(container[o..o + 8].try_into().expect("8 bytes"));
        let h = Self {
            mode: Mode::from_code(container[5]).ok_or_else(|| bad("unknown mode"))?,
            alphabet: be16(6),
            patch: container[8],
            window: container[9],
            height: be32(10),
            width: be32(14),
            crop_top: be16(18),
            crop_left: be16(20),
            token_rows: be16(22),
            token_cols: be16(24),
            codebook_id: be64(26),
            prior_id: be64(34),
            region_len: be32(42),
            token_len: be32(46),
            coded_symbols: be32(50),
        };
        if h.alphabet < 2 || h.patch < 2 || h.window < 2 || h.window % 2 != 0 {
            return Err(bad("invalid coding parameters"));
        }
        let geometry = CropGeometry::centered(h.height as usize, h.width as usize, h.patch as usize)
            .map_err(|_| bad("image smaller than one patch"))?;
        if geometry.height / h.patch as usize != h.token_rows as usize
            || geometry.width / h.patch as usize != h.token_cols as usize
            || geometry.top != h.crop_top as usize
            || geometry.left != h.crop_left as usize
        {
            return Err(bad("token geometry inconsistent with image size"));
        }
        if (h.mode == Mode::NoLost) != (h.region_len == 0) {
            return Err(bad("region payload presence does not match mode"));
        }
        if (h.token_len as usize) < FLUSH_BYTES {
            return Err(bad("token payload shorter than the coder flush"));
        }
        if h.coded_symbols as u64 > h.token_rows as u64 * h.token_cols as u64 {
            return Err(bad("more coded symbols than tokens"));
        }
        let expected = HEADER_LEN as u64 + h.region_len as u64 + h.token_len as u64;
        if container.len() as u64 != expected {
            return Err(bad(&format!(
                "length {} does not match header total {expected}",
                container.len()
            )));
        }
        Ok(h)
    }

    pub fn token_dims(&self) -> (usize, usize) {
        (self.token_rows as usize, self.token_cols as usize)
    }

    pub fn cropped_pixels(&self) -> u64 {
        self.token_rows as u64 * self.token_cols as u64 * (self.patch as u64).pow(2)
    }
}

/// Bit accounting for one container.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePoint {
    pub bpp: f64,
    pub header_bits: u64,
    pub region_bits: u64,
    pub token_bits: u64,
    pub coded_symbols: u64,
    pub masked_tokens: u64,
    pub pixels: u64,
}

impl RatePoint {
    pub fn total_bits(&self) -> u64 {
        self.header_bits + self.region_bits + self.token_bits
    }
}

pub fn stats(container: &[u8]) -> Result<RatePoint, CodecError> {
    let h = ContainerHeader::parse(container)?;
    let pixels = h.cropped_pixels();
    let total_bits = container.len() as u64 * 8;
    let (rows, cols) = h.token_dims();
    Ok(RatePoint {
        bpp: total_bits as f64 / pixels as f64,
        header_bits: HEADER_LEN as u64 * 8,
        region_bits: h.region_len as u64 * 8,
        token_bits: h.token_len as u64 * 8,
        coded_symbols: h.coded_symbols as u64,
        masked_tokens: (rows * cols) as u64 - h.coded_symbols as u64,
        pixels,
    })
}

/// Keep-mask as the decoder reconstructs it from a transported region.
pub fn mask_from_region(mode: Mode, region_low: Option<&BinaryGrid>, rows: usize, cols: usize) -> Result<BinaryGrid, CodecError> {
    match (mode, region_low) {
        (Mode::NoLost, _) => Ok(BinaryGrid::ones(rows, cols)),
        (_, Some(low)) => {
            let high = upsample_region(low, rows, cols)?;
            Ok(compose_mask(&checkerboard_template(rows, cols), &high, None)?)
        }
        (_, None) => Err(CodecError::CorruptContainer("masked mode without a region".into())),
    }
}

/// Everything the encoder produced, for tests and diagnostics.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub container: Vec<u8>,
    pub header: ContainerHeader,
    pub tokens: TokenMap,
    pub mask: BinaryGrid,
    /// Preserved region before transport (edges and ROI), token resolution.
    pub region: Option<BinaryGrid>,
}

fn check_models<P: Prior + ?Sized>(codebook: &Codebook, prior: &P) -> Result<(), CodecError> {
    if codebook.len() != prior.alphabet() {
        return Err(mismatch("alphabet", codebook.len(), prior.alphabet()));
    }
    Ok(())
}

pub fn encode_image<P: Prior + ?Sized>(
    image: &ImageBuffer,
    codebook: &Codebook,
    prior: &P,
    mode: Mode,
    opts: &EncodeOptions,
) -> Result<Vec<u8>, CodecError> {
    Ok(encode_detailed(image, codebook, prior, mode, opts)?.container)
}

pub fn encode_detailed<P: Prior + ?Sized>(
    image: &ImageBuffer,
    codebook: &Codebook,
    prior: &P,
    mode: Mode,
    opts: &EncodeOptions,
) -> Result<Encoded, CodecError> {
    check_models(codebook, prior)?;
    if prior.window() != opts.window {
        return Err(mismatch("window size", opts.window, prior.window()));
    }
    let patch = codebook.patch();
    let (cropped, geometry) = center_crop(image, patch)?;
    let tokens = tokenize(image, codebook)?;
    let (rows, cols) = (tokens.height(), tokens.width());
    if rows > u16::MAX as usize || cols > u16::MAX as usize {
        return Err(CodecError::Vq(VqError::DimensionMismatch(format!("{rows}x{cols} tokens exceed u16"))));
    }

    let (region, region_payload, mask) = match mode {
        Mode::NoLost => (None, Vec::new(), BinaryGrid::ones(rows, cols)),
        Mode::Uigc | Mode::Roi => {
            let mut region = extract_edges(&cropped, opts.edges, patch)?;
            if mode == Mode::Roi {
                let roi = opts.roi.as_ref().ok_or(CodecError::RoiMissing)?;
                if roi.dims() != (rows, cols) {
                    return Err(CodecError::RoiDimensionMismatch {
                        expected: (rows, cols),
                        found: roi.dims(),
                    });
                }
                region = if opts.roi_keeps_edges { region.or(roi)? } else { roi.clone() };
            }
            let low = downsample_region(&region);
            let payload = pack_region(&low);
            let mask = mask_from_region(mode, Some(&low), rows, cols)?;
            (Some(region), payload, mask)
        }
    };

    let masked = apply_mask(&tokens, &mask)?;
    let order = scan_order(prior.variant().scan(), rows, cols, prior.window())?;
    let mut encoder = RangeEncoder::new();
    let mut coded = 0u32;
    for (entry, window) in order.iter() {
        if let Cell::Token(t) = masked.get(entry.pos) {
            let dist = prior.predict(&masked, entry.pos, window);
            encoder.encode(t as usize, &dist);
            coded += 1;
        }
    }
    let payload = encoder.finish();

    let header = ContainerHeader {
        mode,
        alphabet: codebook.len() as u16,
        patch: patch as u8,
        window: prior.window() as u8,
        height: image.height() as u32,
        width: image.width() as u32,
        crop_top: geometry.top as u16,
        crop_left: geometry.left as u16,
        token_rows: rows as u16,
        token_cols: cols as u16,
        codebook_id: codebook.id(),
        prior_id: prior.id(),
        region_len: region_payload.len() as u32,
        token_len: payload.len() as u32,
        coded_symbols: coded,
    };
    let mut container = header.to_bytes().to_vec();
    container.extend_from_slice(&region_payload);
    container.extend_from_slice(&payload);
    Ok(Encoded {
        container,
        header,
        tokens,
        mask,
        region,
    })
}

#[derive(Debug, Clone)]
pub struct Decoded {
    pub image: ImageBuffer,
    /// `z^p`: decoded tokens where kept, argmax predictions elsewhere.
    pub tokens: TokenMap,
    pub mask: BinaryGrid,
    pub header: ContainerHeader,
}

pub fn decode_image<P: Prior + ?Sized>(
    container: &[u8],
    codebook: &Codebook,
    prior: &P,
) -> Result<(ImageBuffer, TokenMap), CodecError> {
    let d = decode_detailed(container, codebook, prior)?;
    Ok((d.image, d.tokens))
}

pub fn decode_detailed<P: Prior + ?Sized>(container: &[u8], codebook: &Codebook, prior: &P) -> Result<Decoded, CodecError> {
    let header = ContainerHeader::parse(container)?;
    check_models(codebook, prior)?;
    if header.codebook_id != codebook.id() {
        return Err(mismatch("codebook id", format!("{:016x}", header.codebook_id), format!("{:016x}", codebook.id())));
    }
    if header.prior_id != prior.id() {
        return Err(mismatch("prior id", format!("{:016x}", header.prior_id), format!("{:016x}", prior.id())));
    }
    if header.alphabet as usize != codebook.len() {
        return Err(mismatch("alphabet", header.alphabet, codebook.len()));
    }
    if header.patch as usize != codebook.patch() {
        return Err(mismatch("patch size", header.patch, codebook.patch()));
    }
    if header.window as usize != prior.window() {
        return Err(mismatch("window size", header.window, prior.window()));
    }

    let (rows, cols) = header.token_dims();
    let region_end = HEADER_LEN + header.region_len as usize;
    let low = match header.mode {
        Mode::NoLost => None,
        _ => Some(unpack_region(
            &container[HEADER_LEN..region_end],
            rows.div_ceil(2),
            cols.div_ceil(2),
        )?),
    };
    let mask = mask_from_region(header.mode, low.as_ref(), rows, cols)?;
    if mask.count_ones() != header.coded_symbols as usize {
        return Err(CodecError::CorruptContainer(format!(
            "header announces {} coded symbols, mask keeps {}",
            header.coded_symbols,
            mask.count_ones()
        )));
    }

    let alphabet = codebook.len();
    let mut observed = TokenMap::masked(rows, cols, alphabet)?;
    let mut generated = TokenMap::masked(rows, cols, alphabet)?;
    let mut visited = vec![false; rows * cols];
    let mut decoder = RangeDecoder::new(&container[region_end..])?;
    let order = scan_order(prior.variant().scan(), rows, cols, prior.window())?;
    for (entry, window) in order.iter() {
        let dist = prior.predict_streaming(&observed, &visited, entry, window)?;
        let idx = entry.pos.row * cols + entry.pos.col;
        if mask.bits()[idx] {
            let t = decoder.decode(&dist)? as u16;
            observed.set(entry.pos, Cell::Token(t));
            generated.set(entry.pos, Cell::Token(t));
        } else {
            generated.set(entry.pos, Cell::Token(dist.argmax() as u16));
        }
        visited[idx] = true;
    }
    let image = detokenize(&generated, codebook)?;
    Ok(Decoded {
        image,
        tokens: generated,
        mask,
        header,
    })
}

/// Encoder-side replay of generation: walks the scan order over `z^m` and
/// fills every dropped position with the prior's argmax.
pub fn generate_masked<P: Prior + ?Sized>(prior: &P, tokens: &TokenMap, mask: &BinaryGrid) -> Result<TokenMap, CodecError> {
    let masked = apply_mask(tokens, mask)?;
    let mut out = tokens.clone();
    let order = scan_order(prior.variant().scan(), tokens.height(), tokens.width(), prior.window())?;
    for (entry, window) in order.iter() {
        if masked.get(entry.pos).is_mask() {
            let dist: QuantizedCategorical = prior.predict(&masked, entry.pos, window);
            out.set(entry.pos, Cell::Token(dist.argmax() as u16));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundtripReport {
    pub mode: Mode,
    /// Fraction of kept positions whose decoded token equals the original.
    pub kept_exactness: f64,
    /// Fraction of dropped positions whose decoded token equals the encoder-side replay.
    pub masked_agreement: f64,
    /// Fraction of dropped positions regenerated to the original token.
    pub masked_accuracy: f64,
    /// PSNR of the decoded image against the cropped source, dB.
    pub psnr: f64,
    pub rate: RatePoint,
}

pub fn roundtrip_check<P: Prior + ?Sized>(
    image: &ImageBuffer,
    codebook: &Codebook,
    prior: &P,
    mode: Mode,
    opts: &EncodeOptions,
) -> Result<RoundtripReport, CodecError> {
    let enc = encode_detailed(image, codebook, prior, mode, opts)?;
    let dec = decode_detailed(&enc.container, codebook, prior)?;
    let replay = generate_masked(prior, &enc.tokens, &enc.mask)?;
    let (mut kept, mut kept_ok, mut dropped, mut agree, mut accurate) = (0usize, 0usize, 0usize, 0usize, 0usize);
    for (idx, &keep) in enc.mask.bits().iter().enumerate() {
        let original = enc.tokens.cells()[idx];
        let decoded = dec.tokens.cells()[idx];
        if keep {
            kept += 1;
            kept_ok += (original == decoded) as usize;
        } else {
            dropped += 1;
            agree += (replay.cells()[idx] == decoded) as usize;
            accurate += (original == decoded) as usize;
        }
    }
    let frac = |n: usize, d: usize| if d == 0 { 1.0 } else { n as f64 / d as f64 };
    let (cropped, _) = center_crop(image, codebook.patch())?;
    Ok(RoundtripReport {
        mode,
        kept_exactness: frac(kept_ok, kept),
        masked_agreement: frac(agree, dropped),
        masked_accuracy: frac(accurate, dropped),
        psnr: psnr(&dec.image, &cropped)?,
        rate: stats(&enc.container)?,
    })
}
