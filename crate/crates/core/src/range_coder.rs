//! Byte-oriented range coder over [`QuantizedCategorical`] distributions.
//!
//! The encoder keeps a 32-bit coding window in `low` (bit 32 holds a pending
//! carry) and a 32-bit `range`. Whenever `range` drops below 2^24 the top byte
//! of `low` is shifted out. Bytes that could still receive a carry are held
//! back (one cached byte plus a run of 0xFF bytes) so the output buffer is
//! append-only. `finish` shifts out eight more bytes.
//!
//! Sub-interval bounds are `(range * cum) >> 15` computed in 64 bits, which
//! loses at most one unit of range per symbol.

use crate::categorical::{QuantizedCategorical, TOTAL_BITS};
use thiserror::Error;

const TOP: u32 = 1 << 24;
/// Bytes emitted by [`RangeEncoder::finish`].
pub const FLUSH_BYTES: usize = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoderError {
    #[error("payload exhausted after {0} bytes")]
    PayloadUnderrun(usize),
}

#[inline]
fn split(range: u32, cum: u32) -> u64 {
    (range as u64 * cum as u64) >> TOTAL_BITS
}

/// Interval `[lo, hi)` of `symbol` inside `[0, range)`.
#[inline]
fn sub_interval(range: u32, dist: &QuantizedCategorical, symbol: usize) -> (u64, u64) {
    let lo = split(range, dist.cum(symbol));
    let hi = split(range, dist.cum(symbol + 1));
    (lo, hi)
}

#[derive(Debug)]
pub struct RangeEncoder {
    low: u64,
    range: u32,
    cache: Option<u8>,
    pending_ff: u64,
    out: Vec<u8>,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl RangeEncoder {
    pub fn new() -> Self {
        Self {
            low: 0,
            range: u32::MAX,
            cache: None,
            pending_ff: 0,
            out: Vec::new(),
        }
    }

    pub fn encode(&mut self, symbol: usize, dist: &QuantizedCategorical) {
        assert!(symbol < dist.alphabet(), "symbol {symbol} outside alphabet {}", dist.alphabet());
        let (lo, hi) = sub_interval(self.range, dist, symbol);
        self.low += lo;
        self.range = (hi - lo) as u32;
        while self.range < TOP {
            self.shift_low();
            self.range <<= 8;
        }
    }

    fn shift_low(&mut self) {
        if self.low < 0xFF00_0000 || self.low >= 1 << 32 {
            let carry = (self.low >> 32) as u8;
            match self.cache {
                Some(c) => self.out.push(c.wrapping_add(carry)),
                None => debug_assert_eq!(carry, 0, "carry past the first byte"),
            }
            for _ in 0..self.pending_ff {
                self.out.push(0xFFu8.wrapping_add(carry));
            }
            self.pending_ff = 0;
            self.cache = Some((self.low >> 24) as u8);
        } else {
            self.pending_ff += 1;
        }
        self.low = (self.low & 0x00FF_FFFF) << 8;
    }

    /// Bytes already committed to the output; excludes held-back bytes.
    pub fn bytes_written(&self) -> usize {
        self.out.len()
    }

    pub fn finish(mut self) -> Vec<u8> {
        for _ in 0..FLUSH_BYTES {
            self.shift_low();
        }
        if let Some(c) = self.cache.take() {
            self.out.push(c);
        }
        for _ in 0..self.pending_ff {
            self.out.push(0xFF);
        }
        self.out
    }
}

#[derive(Debug)]
pub struct RangeDecoder<'a> {
    code: u64,
    range: u32,
    input: &'a [u8],
    cursor: usize,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(input: &'a [u8]) -> Result<Self, CoderError> {
        let mut dec = Self {
            code: 0,
            range: u32::MAX,
            input,
            cursor: 0,
        };
        for _ in 0..4 {
            dec.code = (dec.code << 8) | dec.next_byte()? as u64;
        }
        Ok(dec)
    }

    fn next_byte(&mut self) -> Result<u8, CoderError> {
        let b = *self
            .input
            .get(self.cursor)
            .ok_or(CoderError::PayloadUnderrun(self.input.len()))?;
        self.cursor += 1;
        Ok(b)
    }

    pub fn decode(&mut self, dist: &QuantizedCategorical) -> Result<usize, CoderError> {
        let range = self.range;
        // Largest s with split(range, cum[s]) <= code. The split is monotone in s.
        let (mut lo_s, mut hi_s) = (0usize, dist.alphabet());
        while hi_s - lo_s > 1 {
            let mid = (lo_s + hi_s) / 2;
            if split(range, dist.cum(mid)) <= self.code {
                lo_s = mid;
            } else {
                hi_s = mid;
            }
        }
        let symbol = lo_s;
        let (lo, hi) = sub_interval(range, dist, symbol);
        self.code -= lo;
        self.range = (hi - lo) as u32;
        while self.range < TOP {
            self.code = ((self.code << 8) | self.next_byte()? as u64) & 0xFFFF_FFFF;
            self.range <<= 8;
        }
        Ok(symbol)
    }

    pub fn position(&self) -> usize {
        self.cursor
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn skewed(k: usize, hot: usize) -> QuantizedCategorical {
        let mut f = vec![1u32; k];
        f[hot] = (1 << 15) - (k as u32 - 1);
        QuantizedCategorical::from_frequencies(&f).unwrap()
    }

    #[test]
    fn empty_payload_is_flush_only() {
        let payload = RangeEncoder::new().finish();
        assert_eq!(payload.len(), FLUSH_BYTES);
    }

    #[test]
    fn skewed_repeats_stay_within_bound() {
        let k = 16;
        let d = skewed(k, 3);
        let mut enc = RangeEncoder::new();
        for _ in 0..100 {
            enc.encode(3, &d);
        }
        let payload = enc.finish();
        let bound = 100.0 * d.cost_bits(3) + 64.0;
        assert!((payload.len() * 8) as f64 <= bound, "{} > {bound}", payload.len() * 8);
        let mut dec = RangeDecoder::new(&payload).unwrap();
        for _ in 0..100 {
            assert_eq!(dec.decode(&d).unwrap(), 3);
        }
    }

    #[test]
    fn single_binary_symbol() {
        let d = QuantizedCategorical::uniform(2).unwrap();
        let mut enc = RangeEncoder::new();
        enc.encode(1, &d);
        let payload = enc.finish();
        assert!(payload.len() * 8 <= 1 + 64);
        assert_eq!(RangeDecoder::new(&payload).unwrap().decode(&d).unwrap(), 1);
    }

    #[test]
    fn carry_chain_round_trip() {
        // Repeatedly coding the top symbol of a heavily skewed distribution
        // pushes `low` toward the top of the window and exercises 0xFF runs.
        let d = skewed(4, 3);
        let lo = skewed(4, 0);
        let mut symbols = Vec::new();
        for i in 0..5000 {
            symbols.push(if i % 97 == 0 { 0 } else { 3 });
        }
        let mut enc = RangeEncoder::new();
        for (i, &s) in symbols.iter().enumerate() {
            enc.encode(s, if i % 3 == 0 { &lo } else { &d });
        }
        let payload = enc.finish();
        let mut dec = RangeDecoder::new(&payload).unwrap();
        for (i, &s) in symbols.iter().enumerate() {
            assert_eq!(dec.decode(if i % 3 == 0 { &lo } else { &d }).unwrap(), s, "at {i}");
        }
    }

    #[test]
    fn truncated_payload_underruns() {
        let d = QuantizedCategorical::uniform(256).unwrap();
        let mut enc = RangeEncoder::new();
        for s in 0..64 {
            enc.encode(s, &d);
        }
        let payload = enc.finish();
        let cut = &payload[..payload.len() - FLUSH_BYTES - 2];
        let mut dec = RangeDecoder::new(cut).unwrap();
        let err = (0..64).map(|_| dec.decode(&d)).find(|r| r.is_err());
        assert!(matches!(err, Some(Err(CoderError::PayloadUnderrun(_)))));
        assert!(matches!(RangeDecoder::new(&[1, 2]), Err(CoderError::PayloadUnderrun(2))));
    }
}
