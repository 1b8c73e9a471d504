//! Integer categorical distributions with a fixed power-of-two total.
//!
//! This is the single currency between the prior and the range coder: the
//! prior emits one per coded position, the coder narrows its interval by it.

use thiserror::Error;

pub const TOTAL_BITS: u32 = 15;
/// Sum of every distribution's frequencies.
pub const TOTAL: u32 = 1 << TOTAL_BITS;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CategoricalError {
    #[error("alphabet size {0} outside [2, {TOTAL}]")]
    InvalidAlphabet(usize),
    #[error("frequencies sum to {0}, expected {TOTAL}")]
    BadTotal(u64),
    #[error("symbol {0} has zero frequency")]
    ZeroFrequency(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuantizedCategorical {
    /// `cum[s]..cum[s + 1]` is the interval of symbol `s`; `cum[K] == TOTAL`.
    cum: Vec<u32>,
}

impl QuantizedCategorical {
    pub fn from_frequencies(freqs: &[u32]) -> Result<Self, CategoricalError> {
        if freqs.len() < 2 || freqs.len() > TOTAL as usize {
            return Err(CategoricalError::InvalidAlphabet(freqs.len()));
        }
        if let Some(s) = freqs.iter().position(|&f| f == 0) {
            return Err(CategoricalError::ZeroFrequency(s));
        }
        let sum: u64 = freqs.iter().map(|&f| f as u64).sum();
        if sum != TOTAL as u64 {
            return Err(CategoricalError::BadTotal(sum));
        }
        let mut cum = Vec::with_capacity(freqs.len() + 1);
        cum.push(0);
        let mut acc = 0;
        for &f in freqs {
            acc += f;
            cum.push(acc);
        }
        Ok(Self { cum })
    }

    pub fn uniform(alphabet: usize) -> Result<Self, CategoricalError> {
        Self::from_counts(&vec![0; alphabet])
    }

    /// Add-one smoothing followed by largest-remainder apportionment to
    /// [`TOTAL`]. Every symbol ends with at least frequency 1; remainder ties
    /// go to the lowest symbol index.
    pub fn from_counts(counts: &[u32]) -> Result<Self, CategoricalError> {
        let k = counts.len();
        if !(2..=TOTAL as usize).contains(&k) {
            return Err(CategoricalError::InvalidAlphabet(k));
        }
        let smoothed: Vec<u64> = counts.iter().map(|&c| c as u64 + 1).collect();
        Self::from_frequencies(&apportion(&smoothed, TOTAL as u64))
    }

    pub fn alphabet(&self) -> usize {
        self.cum.len() - 1
    }

    pub fn freq(&self, symbol: usize) -> u32 {
        self.cum[symbol + 1] - self.cum[symbol]
    }

    pub fn cum(&self, symbol: usize) -> u32 {
        self.cum[symbol]
    }

    pub fn frequencies(&self) -> Vec<u32> {
        self.cum.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Symbol whose interval contains `target`, which must be below [`TOTAL`].
    pub fn symbol_at(&self, target: u32) -> usize {
        debug_assert!(target < TOTAL);
        self.cum.partition_point(|&c| c <= target) - 1
    }

    /// Most probable symbol; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        let mut best_freq = 0;
        for s in 0..self.alphabet() {
            let f = self.freq(s);
            if f > best_freq {
                best = s;
                best_freq = f;
            }
        }
        best
    }

    /// Ideal code length of `symbol`, in bits.
    pub fn cost_bits(&self, symbol: usize) -> f64 {
        -(self.freq(symbol) as f64 / TOTAL as f64).log2()
    }
}

/// Largest-remainder apportionment of `total` units over `weights`, with a
/// floor of one unit per entry.
fn apportion(weights: &[u64], total: u64) -> Vec<u32> {
    let sum: u64 = weights.iter().sum();
    let k = weights.len() as u64;
    debug_assert!(sum > 0 && k <= total);

    let mut freqs: Vec<u64> = Vec::with_capacity(weights.len());
    // Remainders are `total * w mod sum`; comparing them compares fractional parts.
    let mut remainders: Vec<u64> = Vec::with_capacity(weights.len());
    for &w in weights {
        let scaled = total as u128 * w as u128;
        freqs.push((scaled / sum as u128) as u64);
        remainders.push((scaled % sum as u128) as u64);
    }

    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| remainders[b].cmp(&remainders[a]).then(a.cmp(&b)));

    let floor_sum: u64 = freqs.iter().sum();
    let mut missing = total - floor_sum;
    for &s in order.iter().cycle() {
        if missing == 0 {
            break;
        }
        freqs[s] += 1;
        missing -= 1;
    }

    // Floor at 1, paid for by the largest entries (lowest index on ties).
    let mut excess = 0u64;
    for f in freqs.iter_mut() {
        if *f == 0 {
            *f = 1;
            excess += 1;
        }
    }
    while excess > 0 {
        let (idx, _) = freqs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("non-empty");
        freqs[idx] -= 1;
        excess -= 1;
    }
    freqs.into_iter().map(|f| f as u32).collect()
}
