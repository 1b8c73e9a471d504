//! Count-based spatial prior over token maps.
//!
//! For every coded position the model looks at the stage's context template
//! (see [`crate::token_core::template`]) in the partially known map `z^m`,
//! where slots may hold a token, MASK, or the out-of-window marker. Counts
//! are kept for the full context and for every truncation obtained by
//! dropping trailing slots, down to the per-stage order-0 table. Prediction
//! backs off from the longest context until a table entry holds at least
//! `threshold` observations, then smooths and quantizes.

use crate::categorical::{CategoricalError, QuantizedCategorical};
use crate::fnv1a64;
use crate::mask::BinaryGrid;
use crate::token_core::{
    context_positions_for, group_of, scan_order, stage_count, template, Cell, ContextSlot, OrderEntry, Position,
    ScanKind, TokenError, TokenMap, WindowRect, MAX_CONTEXT_SLOTS,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use thiserror::Error;

pub const DEFAULT_THRESHOLD: u16 = 8;
pub const DEFAULT_MASK_TRIALS: usize = 4;
pub const DEFAULT_WINDOW: usize = 18;

const MODEL_MAGIC: &[u8; 8] = b"UIGCPRI1";
const MODEL_VERSION: u8 = 1;
const SLOT_MASK: u16 = 0xFFFE;
const SLOT_OUT_OF_BOUNDS: u16 = 0xFFFF;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PriorError {
    #[error("token map alphabet {found} does not match model alphabet {expected}")]
    AlphabetMismatch { expected: usize, found: usize },
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("context of ({row}, {col}) refers to a position that is not coded yet")]
    CausalityViolation { row: usize, col: usize },
    #[error("token map contains MASK cells")]
    MaskPresent,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("corrupt model file: {0}")]
    CorruptModel(String),
    #[error("model id mismatch: stored {stored:016x}, computed {computed:016x}")]
    IdMismatch { stored: u64, computed: u64 },
    #[error(transparent)]
    Token(#[from] TokenError),
    #[error(transparent)]
    Categorical(#[from] CategoricalError),
}

/// Scan order and context templates of a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Four-stage checkerboard order.
    Mst,
    /// Raster order with an upper-left template.
    Rt,
}

impl Variant {
    pub fn scan(self) -> ScanKind {
        match self {
            Variant::Mst => ScanKind::MultiStage,
            Variant::Rt => ScanKind::Raster,
        }
    }

    fn code(self) -> u8 {
        match self {
            Variant::Mst => 0,
            Variant::Rt => 1,
        }
    }

    fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Variant::Mst),
            1 => Some(Variant::Rt),
            _ => None,
        }
    }

    pub fn stage_of(self, pos: Position) -> u8 {
        match self {
            Variant::Mst => group_of(pos.row, pos.col).value(),
            Variant::Rt => 0,
        }
    }
}

/// Value observed in one context slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlotValue {
    Token(u16),
    Mask,
    OutOfBounds,
}

impl SlotValue {
    fn from_code(code: u16) -> Self {
        match code {
            SLOT_MASK => SlotValue::Mask,
            SLOT_OUT_OF_BOUNDS => SlotValue::OutOfBounds,
            t => SlotValue::Token(t),
        }
    }
}

/// A realized conditioning context: stage, the number of trailing template
/// slots dropped, and the remaining slot values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContextKey {
    stage: u8,
    dropped: u8,
    len: u8,
    slots: [u16; MAX_CONTEXT_SLOTS],
}

impl ContextKey {
    pub fn stage(&self) -> u8 {
        self.stage
    }

    pub fn dropped(&self) -> u8 {
        self.dropped
    }

    pub fn slots(&self) -> Vec<SlotValue> {
        self.slots[..self.len as usize].iter().map(|&c| SlotValue::from_code(c)).collect()
    }

    fn truncated(full: &[u16; MAX_CONTEXT_SLOTS], arity: usize, stage: u8, dropped: usize) -> Self {
        let len = arity - dropped;
        let mut slots = [0u16; MAX_CONTEXT_SLOTS];
        slots[..len].copy_from_slice(&full[..len]);
        Self {
            stage,
            dropped: dropped as u8,
            len: len as u8,
            slots,
        }
    }

    fn write(&self, out: &mut Vec<u8>) {
        out.push(self.stage);
        out.push(self.dropped);
        out.push(self.len);
        for &s in &self.slots[..self.len as usize] {
            out.extend_from_slice(&s.to_be_bytes());
        }
    }
}

/// Sparse per-symbol counts, sorted by symbol.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymbolCounts {
    total: u64,
    counts: Vec<(u16, u32)>,
}

impl SymbolCounts {
    fn add(&mut self, symbol: u16, n: u32) {
        match self.counts.binary_search_by_key(&symbol, |&(s, _)| s) {
            Ok(i) => self.counts[i].1 += n,
            Err(i) => self.counts.insert(i, (symbol, n)),
        }
        self.total += n as u64;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn dense(&self, alphabet: usize) -> Vec<u32> {
        let mut out = vec![0u32; alphabet];
        for &(s, c) in &self.counts {
            out[s as usize] = c;
        }
        out
    }
}

/// How the per-pass masking probability for groups 2 and 3 is drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaskSchedule {
    /// `rho ~ Uniform[0, 1)` per pass.
    Uniform,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub mask_trials: usize,
    pub seed: u64,
    pub schedule: MaskSchedule,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            mask_trials: DEFAULT_MASK_TRIALS,
            seed: 0,
            schedule: MaskSchedule::Uniform,
        }
    }
}

/// Anything that can hand out a categorical distribution for a position of
/// a partially known token map. The codec and the evaluation harness only
/// talk to priors through this trait.
pub trait Prior {
    fn alphabet(&self) -> usize;
    fn window(&self) -> usize;
    fn id(&self) -> u64;
    fn variant(&self) -> Variant;
    fn predict(&self, map: &TokenMap, pos: Position, window: &WindowRect) -> QuantizedCategorical;

    /// [`Prior::predict`] for decoders that fill the map as they go: `coded`
    /// flags (row-major) which positions have already been visited.
    fn predict_streaming(
        &self,
        map: &TokenMap,
        coded: &[bool],
        entry: &OrderEntry,
        window: &WindowRect,
    ) -> Result<QuantizedCategorical, PriorError> {
        for slot in context_positions_for(self.variant().scan(), entry.pos, entry.stage, window) {
            if let ContextSlot::At(p) = slot {
                if !coded[p.row * map.width() + p.col] {
                    return Err(PriorError::CausalityViolation {
                        row: entry.pos.row,
                        col: entry.pos.col,
                    });
                }
            }
        }
        Ok(self.predict(map, entry.pos, window))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContextModel {
    variant: Variant,
    alphabet: usize,
    window: usize,
    threshold: u16,
    /// Every backoff order, including the per-stage order-0 entries whose
    /// keys have all slots dropped.
    tables: HashMap<ContextKey, SymbolCounts>,
    id: u64,
}

impl ContextModel {
    /// An untrained model; it predicts the uniform distribution everywhere.
    pub fn new(variant: Variant, alphabet: usize, window: usize) -> Result<Self, PriorError> {
        if !(2..=crate::token_core::MAX_ALPHABET).contains(&alphabet) || alphabet > crate::categorical::TOTAL as usize {
            return Err(PriorError::InvalidConfig(format!("alphabet size {alphabet}")));
        }
        if !(2..=254).contains(&window) || window % 2 != 0 {
            return Err(PriorError::InvalidConfig(format!("window size {window}")));
        }
        let mut m = Self {
            variant,
            alphabet,
            window,
            threshold: DEFAULT_THRESHOLD,
            tables: HashMap::new(),
            id: 0,
        };
        m.refresh_id();
        Ok(m)
    }

    pub fn with_threshold(mut self, threshold: u16) -> Self {
        self.threshold = threshold;
        self.refresh_id();
        self
    }

    pub fn threshold(&self) -> u16 {
        self.threshold
    }

    pub fn table_entries(&self) -> usize {
        self.tables.len()
    }

    fn refresh_id(&mut self) {
        self.id = fnv1a64(&self.body_bytes());
    }

    /// Slot codes for `pos` in `map`, and the template arity.
    fn context_codes(&self, map: &TokenMap, pos: Position, stage: u8, window: &WindowRect) -> ([u16; MAX_CONTEXT_SLOTS], usize) {
        let mut codes = [0u16; MAX_CONTEXT_SLOTS];
        let tmpl = template(self.variant.scan(), stage);
        for (k, &(dr, dc)) in tmpl.iter().enumerate() {
            let row = pos.row as isize + dr;
            let col = pos.col as isize + dc;
            codes[k] = if window.contains(row, col) {
                match map.get(Position::new(row as usize, col as usize)) {
                    Cell::Token(t) => t,
                    Cell::Mask => SLOT_MASK,
                }
            } else {
                SLOT_OUT_OF_BOUNDS
            };
        }
        (codes, tmpl.len())
    }

    /// Count table for `stage` with every slot dropped.
    pub fn order0(&self, stage: u8) -> Option<&SymbolCounts> {
        let arity = template(self.variant.scan(), stage).len();
        self.tables
            .get(&ContextKey::truncated(&[0; MAX_CONTEXT_SLOTS], arity, stage, arity))
    }

    pub fn counts(&self, key: &ContextKey) -> Option<&SymbolCounts> {
        self.tables.get(key)
    }

    /// Accumulates counts from `maps`. Each pass draws a masking probability,
    /// masks group 2 and 3 cells independently with it, then walks the scan
    /// order and counts every unmasked token under its masked context at all
    /// backoff orders.
    pub fn train(&mut self, maps: &[TokenMap], options: &TrainOptions) -> Result<(), PriorError> {
        if options.mask_trials == 0 {
            return Err(PriorError::InvalidConfig("mask_trials must be at least 1".into()));
        }
        for map in maps {
            if map.alphabet() != self.alphabet {
                return Err(PriorError::AlphabetMismatch {
                    expected: self.alphabet,
                    found: map.alphabet(),
                });
            }
            if map.has_mask() {
                return Err(PriorError::MaskPresent);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        for map in maps {
            let order = scan_order(self.variant.scan(), map.height(), map.width(), self.window)?;
            for _ in 0..options.mask_trials {
                let rho = match options.schedule {
                    MaskSchedule::Uniform => rng.gen::<f64>(),
                    MaskSchedule::Fixed(p) => p,
                };
                let mut masked = map.clone();
                for pos in map.positions() {
                    if !group_of(pos.row, pos.col).is_anchor() && rng.gen::<f64>() < rho {
                        masked.set(pos, Cell::Mask);
                    }
                }
                for (entry, window) in order.iter() {
                    let Cell::Token(token) = masked.get(entry.pos) else {
                        continue;
                    };
                    let (codes, arity) = self.context_codes(&masked, entry.pos, entry.stage, window);
                    for dropped in 0..=arity {
                        let key = ContextKey::truncated(&codes, arity, entry.stage, dropped);
                        self.tables.entry(key).or_default().add(token, 1);
                    }
                }
            }
        }
        self.refresh_id();
        Ok(())
    }

    /// Keeps the `budget` best-supported entries above order 0 (highest
    /// total first, then lowest key). Order-0 tables are always kept.
    pub fn prune(&mut self, budget: usize) {
        let mut higher: Vec<(ContextKey, u64)> = self
            .tables
            .iter()
            .filter(|(k, _)| k.len > 0)
            .map(|(k, v)| (*k, v.total))
            .collect();
        if higher.len() <= budget {
            return;
        }
        higher.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        for (key, _) in &higher[budget..] {
            self.tables.remove(key);
        }
        self.refresh_id();
    }

    /// Table entry the backoff settles on for this context, if any.
    pub fn select(&self, map: &TokenMap, pos: Position, window: &WindowRect) -> Option<(ContextKey, &SymbolCounts)> {
        let stage = self.variant.stage_of(pos);
        let (codes, arity) = self.context_codes(map, pos, stage, window);
        for dropped in 0..arity {
            let key = ContextKey::truncated(&codes, arity, stage, dropped);
            if let Some(c) = self.tables.get(&key) {
                if c.total >= self.threshold as u64 {
                    return Some((key, c));
                }
            }
        }
        let key = ContextKey::truncated(&codes, arity, stage, arity);
        self.tables.get(&key).filter(|c| c.total > 0).map(|c| (key, c))
    }

    fn body_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        out.push(MODEL_VERSION);
        out.push(self.variant.code());
        out.extend_from_slice(&(self.alphabet as u16).to_be_bytes());
        out.push(self.window as u8);
        out.extend_from_slice(&self.threshold.to_be_bytes());

        let mut keys: Vec<&ContextKey> = self.tables.keys().collect();
        keys.sort();
        out.extend_from_slice(&(keys.len() as u32).to_be_bytes());
        let mut entry = Vec::new();
        for key in keys {
            let counts = &self.tables[key];
            entry.clear();
            key.write(&mut entry);
            entry.extend_from_slice(&(counts.counts.len() as u16).to_be_bytes());
            for &(s, c) in &counts.counts {
                entry.extend_from_slice(&s.to_be_bytes());
                entry.extend_from_slice(&c.to_be_bytes());
            }
            out.extend_from_slice(&(entry.len() as u32).to_be_bytes());
            out.extend_from_slice(&entry);
        }
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.body_bytes();
        out.extend_from_slice(&self.id.to_be_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, PriorError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MODEL_MAGIC {
            return Err(corrupt("bad magic"));
        }
        if r.u8()? != MODEL_VERSION {
            return Err(corrupt("unsupported version"));
        }
        let variant = Variant::from_code(r.u8()?).ok_or_else(|| corrupt("unknown variant"))?;
        let alphabet = r.u16()? as usize;
        let window = r.u8()? as usize;
        let threshold = r.u16()?;
        let mut model = ContextModel::new(variant, alphabet, window)
            .map_err(|e| corrupt(&e.to_string()))?
            .with_threshold(threshold);
        let n_entries = r.u32()? as usize;
        let mut previous: Option<ContextKey> = None;
        for _ in 0..n_entries {
            let len = r.u32()? as usize;
            let mut e = Reader {
                bytes: r.take(len)?,
                pos: 0,
            };
            let stage = e.u8()?;
            let dropped = e.u8()? as usize;
            let n_slots = e.u8()? as usize;
            if stage >= stage_count(variant.scan()) {
                return Err(corrupt("stage out of range"));
            }
            let arity = template(variant.scan(), stage).len();
            if dropped > arity || n_slots != arity - dropped {
                return Err(corrupt("slot count does not match template"));
            }
            let mut codes = [0u16; MAX_CONTEXT_SLOTS];
            for c in codes.iter_mut().take(n_slots) {
                *c = e.u16()?;
                if *c as usize >= alphabet && *c < SLOT_MASK {
                    return Err(corrupt("slot token outside alphabet"));
                }
            }
            let key = ContextKey::truncated(&codes, arity, stage, dropped);
            if previous.is_some_and(|p| p >= key) {
                return Err(corrupt("entries not in canonical order"));
            }
            previous = Some(key);
            let nnz = e.u16()? as usize;
            let mut counts = SymbolCounts::default();
            let mut last_symbol: Option<u16> = None;
            for _ in 0..nnz {
                let s = e.u16()?;
                let c = e.u32()?;
                if s as usize >= alphabet || c == 0 || last_symbol.is_some_and(|l| l >= s) {
                    return Err(corrupt("invalid count entry"));
                }
                last_symbol = Some(s);
                counts.add(s, c);
            }
            if e.pos != e.bytes.len() {
                return Err(corrupt("trailing bytes in entry"));
            }
            model.tables.insert(key, counts);
        }
        let stored = r.u64()?;
        if r.pos != bytes.len() {
            return Err(corrupt("trailing bytes"));
        }
        model.refresh_id();
        if stored != model.id {
            return Err(PriorError::IdMismatch {
                stored,
                computed: model.id,
            });
        }
        Ok(model)
    }
}

fn corrupt(msg: &str) -> PriorError {
    PriorError::CorruptModel(msg.to_string())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], PriorError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| corrupt("truncated"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, PriorError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, PriorError> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32, PriorError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, PriorError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

impl Prior for ContextModel {
    fn alphabet(&self) -> usize {
        self.alphabet
    }

    fn window(&self) -> usize {
        self.window
    }

    fn id(&self) -> u64 {
        self.id
    }

    fn variant(&self) -> Variant {
        self.variant
    }

    fn predict(&self, map: &TokenMap, pos: Position, window: &WindowRect) -> QuantizedCategorical {
        let dist = match self.select(map, pos, window) {
            Some((_, counts)) => QuantizedCategorical::from_counts(&counts.dense(self.alphabet)),
            None => QuantizedCategorical::uniform(self.alphabet),
        };
        dist.expect("alphabet validated at construction")
    }
}

pub fn train_prior(
    maps: &[TokenMap],
    variant: Variant,
    alphabet: usize,
    window: usize,
    mask_trials: usize,
    seed: u64,
) -> Result<ContextModel, PriorError> {
    let mut model = ContextModel::new(variant, alphabet, window)?;
    model.train(
        maps,
        &TrainOptions {
            mask_trials,
            seed,
            schedule: MaskSchedule::Uniform,
        },
    )?;
    Ok(model)
}

/// `z^m`: tokens where `mask` is set, MASK elsewhere.
pub fn apply_mask(map: &TokenMap, mask: &BinaryGrid) -> Result<TokenMap, PriorError> {
    if mask.dims() != (map.height(), map.width()) {
        return Err(PriorError::DimensionMismatch(format!(
            "mask {:?} vs map {}x{}",
            mask.dims(),
            map.height(),
            map.width()
        )));
    }
    let cells = map
        .cells()
        .iter()
        .zip(mask.bits())
        .map(|(&c, &keep)| if keep { c } else { Cell::Mask })
        .collect();
    Ok(TokenMap::from_cells(map.height(), map.width(), map.alphabet(), cells)?)
}

/// Mean ideal code length, in bits, of the tokens kept by `mask` when coded
/// in scan order against the masked map. Returns 0 when nothing is kept.
pub fn cross_entropy<P: Prior + ?Sized>(prior: &P, map: &TokenMap, mask: &BinaryGrid) -> Result<f64, PriorError> {
    if map.has_mask() {
        return Err(PriorError::MaskPresent);
    }
    if map.alphabet() != prior.alphabet() {
        return Err(PriorError::AlphabetMismatch {
            expected: prior.alphabet(),
            found: map.alphabet(),
        });
    }
    let masked = apply_mask(map, mask)?;
    let order = scan_order(prior.variant().scan(), map.height(), map.width(), prior.window())?;
    let mut bits = 0.0;
    let mut coded = 0usize;
    for (entry, window) in order.iter() {
        if let Cell::Token(t) = masked.get(entry.pos) {
            bits += prior.predict(&masked, entry.pos, window).cost_bits(t as usize);
            coded += 1;
        }
    }
    Ok(if coded == 0 { 0.0 } else { bits / coded as f64 })
}
