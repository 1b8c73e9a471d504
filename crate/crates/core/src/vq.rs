//! Patch vector quantization: a k-means codebook over `P x P` RGB patches.
//!
//! Centroids are stored in 8.8 fixed point (`value * 256`, rounded half up)
//! and all distance computations run on integers, so tokenization and
//! painting are bit-identical everywhere.

use crate::token_core::{Cell, TokenError, TokenMap};
use crate::fnv1a64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VqError {
    #[error("image {height}x{width} is smaller than one {patch}x{patch} patch")]
    ImageTooSmall { height: usize, width: usize, patch: usize },
    #[error("need at least {needed} distinct patches, found {found}")]
    TooFewPatches { needed: usize, found: usize },
    #[error("token map contains MASK cells")]
    MaskPresent,
    #[error("token {token} outside codebook of size {k}")]
    IndexOutOfRange { token: usize, k: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid codebook parameters: {0}")]
    InvalidParameters(String),
    #[error("corrupt codebook file: {0}")]
    CorruptCodebook(String),
    #[error("codebook id mismatch: stored {stored:016x}, computed {computed:016x}")]
    IdMismatch { stored: u64, computed: u64 },
    #[error(transparent)]
    Token(#[from] TokenError),
}

/// 8-bit RGB image, row-major, interleaved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    height: usize,
    width: usize,
    samples: Vec<u8>,
}

impl ImageBuffer {
    pub fn new(height: usize, width: usize, samples: Vec<u8>) -> Result<Self, VqError> {
        if height == 0 || width == 0 {
            return Err(VqError::DimensionMismatch(format!("empty image {height}x{width}")));
        }
        if samples.len() != height * width * 3 {
            return Err(VqError::DimensionMismatch(format!(
                "{} samples for {height}x{width}x3",
                samples.len()
            )));
        }
        Ok(Self { height, width, samples })
    }

    pub fn filled(height: usize, width: usize, rgb: [u8; 3]) -> Self {
        Self {
            height,
            width,
            samples: rgb.iter().copied().cycle().take(height * width * 3).collect(),
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn pixel(&self, row: usize, col: usize) -> [u8; 3] {
        let i = (row * self.width + col) * 3;
        [self.samples[i], self.samples[i + 1], self.samples[i + 2]]
    }

    pub fn set_pixel(&mut self, row: usize, col: usize, rgb: [u8; 3]) {
        let i = (row * self.width + col) * 3;
        self.samples[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn crop(&self, top: usize, left: usize, height: usize, width: usize) -> ImageBuffer {
        assert!(top + height <= self.height && left + width <= self.width, "crop out of bounds");
        let mut samples = Vec::with_capacity(height * width * 3);
        for r in top..top + height {
            let start = (r * self.width + left) * 3;
            samples.extend_from_slice(&self.samples[start..start + width * 3]);
        }
        ImageBuffer { height, width, samples }
    }

    /// Patch at token cell `(i, j)`, flattened row, column, channel.
    pub fn patch(&self, i: usize, j: usize, patch: usize) -> Vec<u8> {
        let mut out = Vec::with_capacity(3 * patch * patch);
        for r in i * patch..(i + 1) * patch {
            let start = (r * self.width + j * patch) * 3;
            out.extend_from_slice(&self.samples[start..start + patch * 3]);
        }
        out
    }
}

/// Placement of the largest patch-aligned window inside an image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CropGeometry {
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
}

impl CropGeometry {
    pub fn centered(height: usize, width: usize, patch: usize) -> Result<Self, VqError> {
        if height < patch || width < patch || patch == 0 {
            return Err(VqError::ImageTooSmall { height, width, patch });
        }
        let ch = height - height % patch;
        let cw = width - width % patch;
        Ok(Self {
            top: (height - ch) / 2,
            left: (width - cw) / 2,
            height: ch,
            width: cw,
        })
    }
}

pub fn center_crop(image: &ImageBuffer, patch: usize) -> Result<(ImageBuffer, CropGeometry), VqError> {
    let g = CropGeometry::centered(image.height(), image.width(), patch)?;
    Ok((image.crop(g.top, g.left, g.height, g.width), g))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codebook {
    patch: usize,
    /// `k` entries of `3 * patch^2` fixed-point values.
    entries: Vec<Vec<u16>>,
    id: u64,
}

const CODEBOOK_MAGIC: &[u8; 8] = b"UIGCCBK1";

fn to_fixed(value: u8) -> u16 {
    value as u16 * 256
}

impl Codebook {
    pub fn from_fixed(patch: usize, entries: Vec<Vec<u16>>) -> Result<Self, VqError> {
        if !(2..=255).contains(&patch) {
            return Err(VqError::InvalidParameters(format!("patch size {patch} outside [2, 255]")));
        }
        if entries.is_empty() || entries.len() > u16::MAX as usize {
            return Err(VqError::InvalidParameters(format!("{} codebook entries", entries.len())));
        }
        let dim = 3 * patch * patch;
        if let Some(bad) = entries.iter().position(|e| e.len() != dim) {
            return Err(VqError::InvalidParameters(format!("entry {bad} has wrong length")));
        }
        if let Some(bad) = entries.iter().position(|e| e.iter().any(|&v| v > to_fixed(255))) {
            return Err(VqError::InvalidParameters(format!("entry {bad} exceeds 255.0")));
        }
        let mut cb = Self { patch, entries, id: 0 };
        cb.id = fnv1a64(&cb.body_bytes());
        Ok(cb)
    }

    /// Codebook whose centroids are exactly the given 8-bit patches.
    pub fn from_patches(patch: usize, patches: &[Vec<u8>]) -> Result<Self, VqError> {
        Self::from_fixed(
            patch,
            patches.iter().map(|p| p.iter().map(|&v| to_fixed(v)).collect()).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn patch(&self) -> usize {
        self.patch
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn entry(&self, index: usize) -> &[u16] {
        &self.entries[index]
    }

    /// Centroid rounded to 8 bits (half away from zero).
    pub fn entry_pixels(&self, index: usize) -> Vec<u8> {
        self.entries[index].iter().map(|&v| ((v as u32 + 128) >> 8) as u8).collect()
    }

    /// Nearest centroid in L2, ties to the lowest index.
    pub fn nearest(&self, patch: &[u8]) -> usize {
        nearest_fixed(&self.entries, patch).0
    }

    fn body_bytes(&self) -> Vec<u8> {
        let dim = 3 * self.patch * self.patch;
        let mut out = Vec::with_capacity(11 + self.entries.len() * dim * 2 + 8);
        out.extend_from_slice(CODEBOOK_MAGIC);
        out.extend_from_slice(&(self.entries.len() as u16).to_be_bytes());
        out.push(self.patch as u8);
        for e in &self.entries {
            for &v in e {
                out.extend_from_slice(&v.to_be_bytes());
            }
        }
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.body_bytes();
        out.extend_from_slice(&self.id.to_be_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, VqError> {
        let corrupt = |m: &str| VqError::CorruptCodebook(m.to_string());
        if bytes.len() < 11 + 8 || &bytes[..8] != CODEBOOK_MAGIC {
            return Err(corrupt("bad magic or truncated header"));
        }
        let k = u16::from_be_bytes([bytes[8], bytes[9]]) as usize;
        let patch = bytes[10] as usize;
        let dim = 3 * patch * patch;
        let body_len = 11 + k * dim * 2;
        if bytes.len() != body_len + 8 {
            return Err(corrupt("length does not match header"));
        }
        let values: Vec<u16> = bytes[11..body_len]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect();
        let entries = if dim == 0 {
            Vec::new()
        } else {
            values.chunks(dim).map(|c| c.to_vec()).collect()
        };
        let cb = Self::from_fixed(patch, entries).map_err(|e| VqError::CorruptCodebook(e.to_string()))?;
        let stored = u64::from_be_bytes(bytes[body_len..].try_into().expect("8 bytes"));
        if stored != cb.id {
            return Err(VqError::IdMismatch {
                stored,
                computed: cb.id,
            });
        }
        Ok(cb)
    }
}

fn sq_dist(centroid: &[u16], patch: &[u8], bound: u64) -> u64 {
    let mut acc = 0u64;
    for (chunk_c, chunk_p) in centroid.chunks(48).zip(patch.chunks(48)) {
        for (&c, &p) in chunk_c.iter().zip(chunk_p) {
            let d = to_fixed(p) as i64 - c as i64;
            acc += (d * d) as u64;
        }
        if acc > bound {
            return acc;
        }
    }
    acc
}

fn nearest_fixed(entries: &[Vec<u16>], patch: &[u8]) -> (usize, u64) {
    let mut best = (0usize, u64::MAX);
    for (idx, c) in entries.iter().enumerate() {
        let d = sq_dist(c, patch, best.1);
        if d < best.1 {
            best = (idx, d);
        }
    }
    best
}

/// Deterministic k-means over all patches of the center-cropped images.
///
/// Initialization picks a seeded random first centroid and then repeatedly the
/// point farthest from the chosen set. Lloyd steps accumulate exact integer
/// sums; an empty cluster is re-seeded with the point farthest from its
/// current centroid. The result is sorted lexicographically.
pub fn train_codebook(
    images: &[ImageBuffer],
    k: usize,
    patch: usize,
    iterations: usize,
    seed: u64,
) -> Result<Codebook, VqError> {
    if k < 1 || iterations < 1 || patch < 2 {
        return Err(VqError::InvalidParameters(format!(
            "k={k}, patch={patch}, iterations={iterations}"
        )));
    }
    let mut patches = Vec::new();
    for image in images {
        let (cropped, _) = center_crop(image, patch)?;
        for i in 0..cropped.height() / patch {
            for j in 0..cropped.width() / patch {
                patches.push(cropped.patch(i, j, patch));
            }
        }
    }
    patches.sort_unstable();
    // Distinct points with multiplicities.
    let mut points: Vec<Vec<u8>> = Vec::new();
    let mut weights: Vec<u64> = Vec::new();
    for p in patches {
        if points.last() == Some(&p) {
            *weights.last_mut().expect("non-empty") += 1;
        } else {
            points.push(p);
            weights.push(1);
        }
    }
    if points.len() < k {
        return Err(VqError::TooFewPatches {
            needed: k,
            found: points.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.gen_range(0..points.len());
    let mut centroids: Vec<Vec<u16>> = vec![points[first].iter().map(|&v| to_fixed(v)).collect()];
    let mut min_dist: Vec<u64> = points.iter().map(|p| sq_dist(&centroids[0], p, u64::MAX)).collect();
    while centroids.len() < k {
        let far = argmax_lowest(&min_dist);
        let c: Vec<u16> = points[far].iter().map(|&v| to_fixed(v)).collect();
        for (d, p) in min_dist.iter_mut().zip(&points) {
            *d = (*d).min(sq_dist(&c, p, *d));
        }
        centroids.push(c);
    }

    let dim = 3 * patch * patch;
    let mut assignment = vec![usize::MAX; points.len()];
    for _ in 0..iterations {
        let mut changed = false;
        let mut dist = vec![0u64; points.len()];
        for (idx, p) in points.iter().enumerate() {
            let (c, d) = nearest_fixed(&centroids, p);
            changed |= assignment[idx] != c;
            assignment[idx] = c;
            dist[idx] = d;
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0u64; dim]; k];
        let mut counts = vec![0u64; k];
        for ((p, &c), &w) in points.iter().zip(&assignment).zip(&weights) {
            counts[c] += w;
            for (s, &v) in sums[c].iter_mut().zip(p) {
                *s += v as u64 * w;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c]
                    .iter()
                    .map(|&s| ((2 * s * 256 + counts[c]) / (2 * counts[c])) as u16)
                    .collect();
            } else {
                let far = argmax_lowest(&dist);
                centroids[c] = points[far].iter().map(|&v| to_fixed(v)).collect();
                dist[far] = 0;
            }
        }
    }
    centroids.sort();
    Codebook::from_fixed(patch, centroids)
}

fn argmax_lowest(values: &[u64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Center-crops to a multiple of the patch size and maps each patch to its
/// nearest centroid.
pub fn tokenize(image: &ImageBuffer, codebook: &Codebook) -> Result<TokenMap, VqError> {
    if codebook.len() < 2 {
        return Err(VqError::InvalidParameters("tokenizing needs at least two centroids".into()));
    }
    let p = codebook.patch();
    let (cropped, g) = center_crop(image, p)?;
    let (h, w) = (g.height / p, g.width / p);
    let mut tokens = Vec::with_capacity(h * w);
    for i in 0..h {
        for j in 0..w {
            tokens.push(codebook.nearest(&cropped.patch(i, j, p)) as u16);
        }
    }
    Ok(TokenMap::from_tokens(h, w, codebook.len(), tokens)?)
}

pub fn detokenize(tokens: &TokenMap, codebook: &Codebook) -> Result<ImageBuffer, VqError> {
    let p = codebook.patch();
    let (h, w) = (tokens.height(), tokens.width());
    let painted: Vec<Vec<u8>> = (0..codebook.len()).map(|i| codebook.entry_pixels(i)).collect();
    let mut img = ImageBuffer {
        height: h * p,
        width: w * p,
        samples: vec![0; h * w * p * p * 3],
    };
    for (idx, cell) in tokens.cells().iter().enumerate() {
        let t = match *cell {
            Cell::Token(t) => t as usize,
            Cell::Mask => return Err(VqError::MaskPresent),
        };
        let src = painted.get(t).ok_or(VqError::IndexOutOfRange {
            token: t,
            k: codebook.len(),
        })?;
        let (i, j) = (idx / w, idx % w);
        for r in 0..p {
            let dst = ((i * p + r) * img.width + j * p) * 3;
            img.samples[dst..dst + p * 3].copy_from_slice(&src[r * p * 3..(r + 1) * p * 3]);
        }
    }
    Ok(img)
}

pub fn mse(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64, VqError> {
    if a.height != b.height || a.width != b.width {
        return Err(VqError::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.height, a.width, b.height, b.width
        )));
    }
    let sse: u64 = a
        .samples
        .iter()
        .zip(&b.samples)
        .map(|(&x, &y)| {
            let d = x as i64 - y as i64;
            (d * d) as u64
        })
        .sum();
    Ok(sse as f64 / a.samples.len() as f64)
}

/// Peak signal-to-noise ratio in dB; `f64::INFINITY` for identical images.
pub fn psnr(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64, VqError> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (255.0f64 * 255.0 / m).log10())
}
