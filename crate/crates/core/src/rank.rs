//! Bitvector with constant-time rank.
//!
//! Each 512-bit superblock carries a 64-bit absolute count and one word of
//! seven packed 9-bit counts, relative to the superblock start, for words
//! 1..=7 (word 0 is always 0). That is 128 index bits per 512 data bits.

use crate::error::{Error, Result};

const WORDS_PER_SUPER: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankBitvector {
    len: usize,
    bits: Vec<u64>,
    /// Pairs `(absolute count, packed relative counts)` per superblock,
    /// plus one trailing absolute entry.
    index: Vec<u64>,
}

impl RankBitvector {
    /// Builds from packed words; bits past `len` are cleared.
    pub fn from_words(mut bits: Vec<u64>, len: usize) -> Self {
        bits.resize(len.div_ceil(64), 0);
        if len % 64 != 0 {
            if let Some(last) = bits.last_mut() {
                *last &= (1u64 << (len % 64)) - 1;
            }
        }
        let supers = bits.len().div_ceil(WORDS_PER_SUPER);
        let mut index = Vec::with_capacity(2 * supers + 1);
        let mut total = 0u64;
        for s in 0..supers {
            index.push(total);
            let mut rel = 0u64;
            let mut packed = 0u64;
            for w in 0..WORDS_PER_SUPER {
                if w > 0 {
                    packed |= rel << (9 * (w - 1));
                }
                if let Some(&word) = bits.get(s * WORDS_PER_SUPER + w) {
                    rel += u64::from(word.count_ones());
                }
            }
            index.push(packed);
            total += rel;
        }
        index.push(total);
        Self { len, bits, index }
    }

    pub fn from_positions(len: usize, positions: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut bits = vec![0u64; len.div_ceil(64)];
        for p in positions {
            if p >= len {
                return Err(Error::IndexOutOfRange { index: p, len });
            }
            bits[p / 64] |= 1 << (p % 64);
        }
        Ok(Self::from_words(bits, len))
    }

    pub fn from_bools(bools: &[bool]) -> Self {
        let mut bits = vec![0u64; bools.len().div_ceil(64)];
        for (i, &b) in bools.iter().enumerate() {
            if b {
                bits[i / 64] |= 1 << (i % 64);
            }
        }
        Self::from_words(bits, bools.len())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        i < self.len && (self.bits[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        *self.index.last().expect("index is never empty") as usize
    }

    /// Number of set bits in `[0, i)`.
    pub fn rank1(&self, i: usize) -> Result<usize> {
        if i > self.len {
            return Err(Error::IndexOutOfRange { index: i, len: self.len });
        }
        Ok(self.rank1_unchecked(i))
    }

    #[inline]
    pub(crate) fn rank1_unchecked(&self, i: usize) -> usize {
        let word = i / 64;
        let sup = word / WORDS_PER_SUPER;
        if sup * 2 >= self.index.len() - 1 {
            return self.count_ones();
        }
        let w = word % WORDS_PER_SUPER;
        let base = self.index[2 * sup];
        let rel = if w == 0 {
            0
        } else {
            (self.index[2 * sup + 1] >> (9 * (w - 1))) & 0x1ff
        };
        let partial = match self.bits.get(word) {
            Some(&bits) if i % 64 != 0 => u64::from((bits & ((1u64 << (i % 64)) - 1)).count_ones()),
            _ => 0,
        };
        (base + rel + partial) as usize
    }

    /// Bits used by the rank index (excluding the raw bits).
    pub fn index_bits(&self) -> usize {
        self.index.len() * 64
    }

    /// Raw bits plus index bits.
    pub fn total_bits(&self) -> usize {
        self.len + self.index_bits()
    }
}
