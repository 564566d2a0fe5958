use xxhash_rust::xxh3::xxh3_128_with_seed;

use crate::error::{Error, Result};

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed used by retry number `generation` of a construction seeded with `master`.
#[inline]
pub fn generation_seed(master: u64, generation: u32) -> u64 {
    mix64(master ^ mix64(0x9e37_79b9_7f4a_7c15 ^ u64::from(generation)))
}

/// Maps a 64-bit hash to `[0, range)` by multiply-high.
#[inline]
pub fn reduce(hash: u64, range: u64) -> u64 {
    ((u128::from(hash) * u128::from(range)) >> 64) as u64
}

/// One member of a family of keyed hash functions.
///
/// The same `(master_seed, function_index, key)` always yields the same
/// output; distinct function indices are keyed independently.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeededHasher {
    master_seed: u64,
    function_index: u32,
    key: u64,
}

impl SeededHasher {
    pub fn new(master_seed: u64, function_index: u32) -> Self {
        let key = mix64(master_seed.wrapping_add(mix64(u64::from(function_index) + 1)));
        Self {
            master_seed,
            function_index,
            key,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn function_index(&self) -> u32 {
        self.function_index
    }

    #[inline]
    pub fn hash128(&self, key: &[u8]) -> u128 {
        xxh3_128_with_seed(key, self.key)
    }

    #[inline]
    pub fn hash(&self, key: &[u8]) -> u64 {
        let h = self.hash128(key);
        (h as u64) ^ mix64((h >> 64) as u64)
    }

    /// Uniform index in `[0, range)`.
    #[inline]
    pub fn hash_to_range(&self, key: &[u8], range: u64) -> Result<u64> {
        if range == 0 {
            return Err(Error::ZeroRange);
        }
        Ok(reduce(self.hash(key), range))
    }
}

/// A supply of hash functions `g_1, g_2, ...` evaluated into chosen ranges.
pub trait HashSource {
    /// Value of function number `ell` (1-based) on `key`, in `[0, range)`.
    fn draw(&self, key: &[u8], ell: usize, range: u64) -> u64;
}

/// Functions `first_index, first_index + 1, ...` of a seeded family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeededFamily {
    pub seed: u64,
    pub first_index: u32,
}

impl SeededFamily {
    pub fn new(seed: u64, first_index: u32) -> Self {
        Self { seed, first_index }
    }
}

impl HashSource for SeededFamily {
    #[inline]
    fn draw(&self, key: &[u8], ell: usize, range: u64) -> u64 {
        let h = SeededHasher::new(self.seed, self.first_index + ell as u32 - 1);
        reduce(h.hash(key), range)
    }
}
