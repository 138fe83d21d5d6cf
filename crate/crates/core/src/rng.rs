//! 64-bit Mersenne Twister (MT19937-64) stream.
//!
//! Output is bit-identical to `std::mt19937_64` seeded with the same value.
//! Reals come from the top 53 bits of one draw divided by 2⁵³, so they lie in
//! `[0, 1)`. Bounded integers use the high word of a 64×64-bit product: one
//! draw per integer, never rejection, which keeps per-move draw counts fixed.

use crate::error::{Error, Result};

const NN: usize = 312;
const MM: usize = 156;
const MATRIX_A: u64 = 0xB502_6F5A_A966_19E9;
const UPPER_MASK: u64 = 0xFFFF_FFFF_8000_0000;
const LOWER_MASK: u64 = 0x7FFF_FFFF;

#[derive(Clone, PartialEq, Eq)]
pub struct RngStream {
    state: Box<[u64; NN]>,
    index: usize,
}

impl std::fmt::Debug for RngStream {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RngStream")
            .field("index", &self.index)
            .finish_non_exhaustive()
    }
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        let mut state = Box::new([0u64; NN]);
        state[0] = seed;
        for i in 1..NN {
            let prev = state[i - 1];
            state[i] = 6_364_136_223_846_793_005u64
                .wrapping_mul(prev ^ (prev >> 62))
                .wrapping_add(i as u64);
        }
        RngStream { state, index: NN }
    }

    fn twist(&mut self) {
        let mt = &mut self.state;
        for i in 0..NN {
            let x = (mt[i] & UPPER_MASK) | (mt[(i + 1) % NN] & LOWER_MASK);
            let mut next = mt[(i + MM) % NN] ^ (x >> 1);
            if x & 1 != 0 {
                next ^= MATRIX_A;
            }
            mt[i] = next;
        }
        self.index = 0;
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        if self.index >= NN {
            self.twist();
        }
        let mut x = self.state[self.index];
        self.index += 1;
        x ^= (x >> 29) & 0x5555_5555_5555_5555;
        x ^= (x << 17) & 0x71D6_7FFF_EDA6_0000;
        x ^= (x << 37) & 0xFFF7_EEE0_0000_0000;
        x ^ (x >> 43)
    }

    /// Uniform real in `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)`; `n` must be nonzero.
    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        scale_below(self.next_u64(), n)
    }

    /// Serializes the generator as `index` followed by 312 hex words.
    pub fn to_hex(&self) -> String {
        let mut s = String::with_capacity(NN * 17 + 8);
        s.push_str(&self.index.to_string());
        for w in self.state.iter() {
            s.push(' ');
            s.push_str(&format!("{w:016x}"));
        }
        s
    }

    pub fn from_hex(text: &str) -> Result<Self> {
        let mut fields = text.split_whitespace();
        let index: usize = fields
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| Error::Checkpoint("rng: missing index".into()))?;
        if index > NN {
            return Err(Error::Checkpoint(format!("rng: index {index} out of range")));
        }
        let mut state = Box::new([0u64; NN]);
        for (i, slot) in state.iter_mut().enumerate() {
            let word = fields
                .next()
                .ok_or_else(|| Error::Checkpoint(format!("rng: only {i} of {NN} state words")))?;
            *slot = u64::from_str_radix(word, 16).map_err(|e| Error::Checkpoint(format!("rng word {i}: {e}")))?;
        }
        if fields.next().is_some() {
            return Err(Error::Checkpoint("rng: trailing data".into()));
        }
        Ok(RngStream { state, index })
    }
}

/// Maps a raw 64-bit draw onto `[0, n)`.
#[inline]
pub(crate) fn scale_below(raw: u64, n: usize) -> usize {
    ((raw as u128 * n as u128) >> 64) as usize
}
