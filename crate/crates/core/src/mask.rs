//! Edge-preserved checkerboard masking.
//!
//! The keep-mask is `m = m_t | R_H`: the checkerboard template keeps the two
//! anchor groups, and `R_H` keeps token cells that carry image structure. The
//! preserved region travels to the decoder at half resolution (`R_L`) as a
//! zlib stream, and both sides build the mask from the upsampled `R_H` so
//! that encoder and decoder agree bit for bit.

use crate::token_core::group_of;
use crate::vq::{ImageBuffer, VqError};
use flate2::read::ZlibDecoder;
use flate2::write::ZlibEncoder;
use flate2::Compression;
use std::io::{Read, Write};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaskError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("corrupt region payload: {0}")]
    CorruptRegion(String),
    #[error("edge percentile {0} must lie strictly between 0 and 100")]
    InvalidPercentile(f64),
    #[error("edge cell threshold {0} must lie in (0, 1]")]
    InvalidCellThreshold(f64),
    #[error(transparent)]
    Image(#[from] VqError),
}

/// Row-major grid of bits. `true` means keep / preserved.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryGrid {
    height: usize,
    width: usize,
    bits: Vec<bool>,
}

impl BinaryGrid {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, false)
    }

    pub fn ones(height: usize, width: usize) -> Self {
        Self::filled(height, width, true)
    }

    pub fn filled(height: usize, width: usize, value: bool) -> Self {
        Self {
            height,
            width,
            bits: vec![value; height * width],
        }
    }

    pub fn from_bits(height: usize, width: usize, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), height * width, "bit count must equal height * width");
        Self { height, width, bits }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.bits[row * self.width + col] = value;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Pointwise `self >= other`.
    pub fn is_superset_of(&self, other: &BinaryGrid) -> bool {
        self.dims() == other.dims() && self.bits.iter().zip(&other.bits).all(|(&a, &b)| a || !b)
    }

    pub fn or(&self, other: &BinaryGrid) -> Result<BinaryGrid, MaskError> {
        if self.dims() != other.dims() {
            return Err(MaskError::DimensionMismatch(format!(
                "{:?} vs {:?}",
                self.dims(),
                other.dims()
            )));
        }
        Ok(BinaryGrid {
            height: self.height,
            width: self.width,
            bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| a || b).collect(),
        })
    }
}

/// Sobel-based structure detector, evaluated at token resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeParams {
    /// Percentile of gradient magnitudes used as the pixel threshold.
    pub percentile: f64,
    /// Fraction of a patch's pixels that must exceed the threshold.
    pub cell_threshold: f64,
}

impl Default for EdgeParams {
    fn default() -> Self {
        Self {
            percentile: 90.0,
            cell_threshold: 0.05,
        }
    }
}

fn grayscale(image: &ImageBuffer) -> Vec<i32> {
    image
        .samples()
        .chunks_exact(3)
        .map(|px| (px[0] as i32 * 299 + px[1] as i32 * 587 + px[2] as i32 * 114) / 1000)
        .collect()
}

/// `|gx| + |gy|` of the 3x3 Sobel operator, with edge replication.
pub fn sobel_magnitude(image: &ImageBuffer) -> Vec<u32> {
    let (h, w) = (image.height(), image.width());
    let gray = grayscale(image);
    let at = |r: isize, c: isize| -> i32 {
        let r = r.clamp(0, h as isize - 1) as usize;
        let c = c.clamp(0, w as isize - 1) as usize;
        gray[r * w + c]
    };
    let mut out = Vec::with_capacity(h * w);
    for r in 0..h as isize {
        for c in 0..w as isize {
            let gx = (at(r - 1, c + 1) + 2 * at(r, c + 1) + at(r + 1, c + 1))
                - (at(r - 1, c - 1) + 2 * at(r, c - 1) + at(r + 1, c - 1));
            let gy = (at(r + 1, c - 1) + 2 * at(r + 1, c) + at(r + 1, c + 1))
                - (at(r - 1, c - 1) + 2 * at(r - 1, c) + at(r - 1, c + 1));
            out.push(gx.unsigned_abs() + gy.unsigned_abs());
        }
    }
    out
}

/// Preserved region at token resolution for an image whose dimensions are
/// already multiples of `patch` (the pipeline crops before calling this).
/// Trailing pixels that do not fill a whole patch are ignored.
pub fn extract_edges(image: &ImageBuffer, params: EdgeParams, patch: usize) -> Result<BinaryGrid, MaskError> {
    if !(params.percentile > 0.0 && params.percentile < 100.0) {
        return Err(MaskError::InvalidPercentile(params.percentile));
    }
    if !(params.cell_threshold > 0.0 && params.cell_threshold <= 1.0) {
        return Err(MaskError::InvalidCellThreshold(params.cell_threshold));
    }
    let (ph, pw) = (image.height(), image.width());
    if ph < patch || pw < patch {
        return Err(VqError::ImageTooSmall {
            height: ph,
            width: pw,
            patch,
        }
        .into());
    }
    let magnitude = sobel_magnitude(image);
    let mut sorted = magnitude.clone();
    sorted.sort_unstable();
    let idx = (params.percentile / 100.0 * (sorted.len() - 1) as f64).floor() as usize;
    let threshold = sorted[idx];

    let (h, w) = (ph / patch, pw / patch);
    let needed = params.cell_threshold * (patch * patch) as f64;
    let mut grid = BinaryGrid::zeros(h, w);
    for i in 0..h {
        for j in 0..w {
            let mut above = 0usize;
            for r in i * patch..(i + 1) * patch {
                let row = &magnitude[r * pw + j * patch..r * pw + (j + 1) * patch];
                above += row.iter().filter(|&&m| m > threshold).count();
            }
            if above as f64 >= needed {
                grid.set(i, j, true);
            }
        }
    }
    Ok(grid)
}

/// 2x OR-pooling; out-of-range cells count as zero.
pub fn downsample_region(region: &BinaryGrid) -> BinaryGrid {
    let (h, w) = region.dims();
    let (lh, lw) = (h.div_ceil(2), w.div_ceil(2));
    let mut low = BinaryGrid::zeros(lh, lw);
    for i in 0..h {
        for j in 0..w {
            if region.get(i, j) {
                low.set(i / 2, j / 2, true);
            }
        }
    }
    low
}

/// Nearest-neighbor 2x replication cropped to `height x width`.
pub fn upsample_region(low: &BinaryGrid, height: usize, width: usize) -> Result<BinaryGrid, MaskError> {
    if low.dims() != (height.div_ceil(2), width.div_ceil(2)) {
        return Err(MaskError::DimensionMismatch(format!(
            "low-resolution region {:?} cannot upsample to {height}x{width}",
            low.dims()
        )));
    }
    let bits = (0..height)
        .flat_map(|i| (0..width).map(move |j| (i, j)))
        .map(|(i, j)| low.get(i / 2, j / 2))
        .collect();
    Ok(BinaryGrid::from_bits(height, width, bits))
}

/// Keeps the anchor groups: `(i + j)` even.
pub fn checkerboard_template(height: usize, width: usize) -> BinaryGrid {
    let bits = (0..height)
        .flat_map(|i| (0..width).map(move |j| group_of(i, j).is_anchor()))
        .collect();
    BinaryGrid::from_bits(height, width, bits)
}

/// `m = m_t | R_H | roi`.
pub fn compose_mask(
    template: &BinaryGrid,
    preserved: &BinaryGrid,
    roi: Option<&BinaryGrid>,
) -> Result<BinaryGrid, MaskError> {
    let m = template.or(preserved)?;
    match roi {
        Some(roi) => m.or(roi),
        None => Ok(m),
    }
}

/// Row-major, most significant bit first, final byte zero-padded.
pub fn pack_bits(grid: &BinaryGrid) -> Vec<u8> {
    let mut out = vec![0u8; grid.bits.len().div_ceil(8)];
    for (idx, &b) in grid.bits.iter().enumerate() {
        if b {
            out[idx / 8] |= 0x80 >> (idx % 8);
        }
    }
    out
}

pub fn pack_region(low: &BinaryGrid) -> Vec<u8> {
    let mut enc = ZlibEncoder::new(Vec::new(), Compression::best());
    enc.write_all(&pack_bits(low)).expect("writing to a Vec cannot fail");
    enc.finish().expect("writing to a Vec cannot fail")
}

pub fn unpack_region(bytes: &[u8], height: usize, width: usize) -> Result<BinaryGrid, MaskError> {
    let mut plain = Vec::new();
    ZlibDecoder::new(bytes)
        .read_to_end(&mut plain)
        .map_err(|e| MaskError::CorruptRegion(e.to_string()))?;
    let n = height * width;
    if plain.len() != n.div_ceil(8) {
        return Err(MaskError::CorruptRegion(format!(
            "expected {} packed bytes for {height}x{width}, got {}",
            n.div_ceil(8),
            plain.len()
        )));
    }
    if n % 8 != 0 && plain[n / 8] & (0xFF >> (n % 8)) != 0 {
        return Err(MaskError::CorruptRegion("non-zero padding bits".into()));
    }
    let bits = (0..n).map(|idx| plain[idx / 8] & (0x80 >> (idx % 8)) != 0).collect();
    Ok(BinaryGrid::from_bits(height, width, bits))
}
