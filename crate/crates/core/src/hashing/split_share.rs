//! Split-and-share simulation of fully random hash functions.
//!
//! A splitter sends every key to one of `num_chunks` chunks. Each chunk owns
//! a pair of cheap multiply-shift functions `(h0, h1)` into `[r_tab]`, and
//! all chunks share `L` pairs of random tables. Function `j` on chunk `i` is
//! `(T[j][0][h0(x)] + T[j][1][h1(x)]) mod t`.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::seeded::{generation_seed, mix64, reduce, HashSource, SeededHasher};
use crate::error::{Error, Result};

const DIGEST_INDEX: u32 = 0xD16E;
const SPLIT_INDEX: u32 = 0x5917;

/// Retry cap for the splitter and for each chunk's function pair.
pub const SPLIT_SHARE_RETRIES: u32 = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitShareTables {
    seed: u64,
    n_keys: usize,
    num_chunks: usize,
    splitter_generation: u32,
    r_tab: usize,
    t: u64,
    num_functions: usize,
    table_seed: u64,
    /// Per chunk, which candidate multiply-shift pair was accepted.
    pair_attempts: Vec<u32>,
    /// `num_functions` blocks of `2 * r_tab` values.
    tables: Vec<u64>,
}

/// Chunk count, shared-table width and chunk-size limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitShareGeometry {
    pub num_chunks: usize,
    pub r_tab: usize,
    pub max_chunk: usize,
}

impl SplitShareGeometry {
    /// `2 n^(2/3)` chunks of at most `sqrt(n)` keys, tables of `2 n^(3/4)`.
    pub fn for_keys(n: usize) -> Self {
        let nf = n.max(1) as f64;
        Self {
            num_chunks: ((2.0 * nf.powf(2.0 / 3.0)).ceil() as usize).max(2),
            r_tab: ((2.0 * nf.powf(0.75)).ceil() as usize).max(2),
            max_chunk: (nf.sqrt().floor() as usize).max(1),
        }
    }
}

#[inline]
fn digest(seed: u64, key: &[u8]) -> u64 {
    SeededHasher::new(seed, DIGEST_INDEX).hash(key)
}

/// `((a * d + b) mod 2^64) * range >> 64` with odd `a`.
#[inline]
fn multiply_shift(seed: u64, chunk: usize, attempt: u32, side: u64, d: u64, range: usize) -> usize {
    let base = mix64(seed ^ mix64((chunk as u64) << 20 ^ u64::from(attempt) << 2 ^ side));
    let a = base | 1;
    let b = mix64(base);
    reduce(a.wrapping_mul(d).wrapping_add(b), range as u64) as usize
}

/// True if the bipartite multigraph with edges `(left, right)` is a forest.
fn is_acyclic(edges: &[(usize, usize)]) -> bool {
    // Vertices keyed as (side, index); union-find over the touched ones.
    let mut parent: HashMap<(u8, usize), (u8, usize)> = HashMap::new();
    fn find(parent: &mut HashMap<(u8, usize), (u8, usize)>, v: (u8, usize)) -> (u8, usize) {
        let mut root = v;
        while let Some(&p) = parent.get(&root) {
            if p == root {
                break;
            }
            root = p;
        }
        let mut cur = v;
        while cur != root {
            let next = parent.get(&cur).copied().unwrap_or(root);
            parent.insert(cur, root);
            cur = next;
        }
        parent.entry(root).or_insert(root);
        root
    }
    for &(l, r) in edges {
        let a = find(&mut parent, (0, l));
        let b = find(&mut parent, (1, r));
        if a == b {
            return false;
        }
        parent.insert(a, b);
    }
    true
}

impl SplitShareTables {
    /// Splits `keys`, fixes a per-chunk function pair that is acyclic on the
    /// chunk, and fills `num_functions` shared table pairs with values in `[t]`.
    pub fn build<K: AsRef<[u8]>>(keys: &[K], num_functions: usize, t: u64, seed: u64) -> Result<Self> {
        Self::build_with(keys, num_functions, t, seed, SplitShareGeometry::for_keys(keys.len()))
    }

    /// [`SplitShareTables::build`] with explicit chunk count and table width.
    pub fn build_with<K: AsRef<[u8]>>(
        keys: &[K],
        num_functions: usize,
        t: u64,
        seed: u64,
        geometry: SplitShareGeometry,
    ) -> Result<Self> {
        if num_functions == 0 || t < 2 || geometry.num_chunks == 0 || geometry.r_tab == 0 {
            return Err(Error::InvalidParameter(format!(
                "split-and-share needs L >= 1 and t >= 2 (got L = {num_functions}, t = {t})"
            )));
        }
        let n = keys.len();
        let SplitShareGeometry {
            num_chunks,
            r_tab,
            max_chunk,
        } = geometry;
        let digests: Vec<u64> = keys.iter().map(|k| digest(seed, k.as_ref())).collect();

        let mut found = None;
        for generation in 0..SPLIT_SHARE_RETRIES {
            let splitter = SeededHasher::new(generation_seed(seed, generation), SPLIT_INDEX);
            let chunk_of: Vec<usize> = keys
                .iter()
                .map(|k| reduce(splitter.hash(k.as_ref()), num_chunks as u64) as usize)
                .collect();
            let mut sizes = vec![0usize; num_chunks];
            for &c in &chunk_of {
                sizes[c] += 1;
            }
            if sizes.iter().all(|&s| s <= max_chunk) {
                found = Some((generation, chunk_of));
                break;
            }
        }
        let Some((splitter_generation, chunk_of)) = found else {
            return Err(Error::RandomnessExhausted {
                attempts: SPLIT_SHARE_RETRIES,
            });
        };

        let mut members: Vec<Vec<u64>> = vec![Vec::new(); num_chunks];
        for (&c, &d) in chunk_of.iter().zip(&digests) {
            members[c].push(d);
        }
        let mut pair_attempts = Vec::with_capacity(num_chunks);
        for (chunk, ds) in members.iter().enumerate() {
            let attempt = (0..SPLIT_SHARE_RETRIES).find(|&att| {
                let edges: Vec<(usize, usize)> = ds
                    .iter()
                    .map(|&d| {
                        (
                            multiply_shift(seed, chunk, att, 0, d, r_tab),
                            multiply_shift(seed, chunk, att, 1, d, r_tab),
                        )
                    })
                    .collect();
                is_acyclic(&edges)
            });
            match attempt {
                Some(a) => pair_attempts.push(a),
                None => {
                    return Err(Error::RandomnessExhausted {
                        attempts: SPLIT_SHARE_RETRIES,
                    })
                }
            }
        }

        let table_seed = mix64(seed ^ 0x7AB1_E5EE_D000_0000);
        let tables = random_tables(table_seed, num_functions, r_tab, t);
        Ok(Self {
            seed,
            n_keys: n,
            num_chunks,
            splitter_generation,
            r_tab,
            t,
            num_functions,
            table_seed,
            pair_attempts,
            tables,
        })
    }

    /// Rebuilds the tables from stored parameters (used when loading).
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        seed: u64,
        n_keys: usize,
        num_chunks: usize,
        splitter_generation: u32,
        r_tab: usize,
        t: u64,
        num_functions: usize,
        pair_attempts: Vec<u32>,
    ) -> Result<Self> {
        if pair_attempts.len() != num_chunks || t < 2 || r_tab == 0 || num_functions == 0 {
            return Err(Error::Malformed("split-and-share parameters".into()));
        }
        let table_seed = mix64(seed ^ 0x7AB1_E5EE_D000_0000);
        Ok(Self {
            seed,
            n_keys,
            num_chunks,
            splitter_generation,
            r_tab,
            t,
            num_functions,
            table_seed,
            pair_attempts,
            tables: random_tables(table_seed, num_functions, r_tab, t),
        })
    }

    /// Replaces the shared tables; `values` holds `L` blocks of
    /// `T[j][0]` followed by `T[j][1]`, each `r_tab` long.
    pub fn with_tables(mut self, values: Vec<u64>) -> Result<Self> {
        if values.len() != self.tables.len() {
            return Err(Error::DimensionMismatch {
                expected: self.tables.len(),
                actual: values.len(),
            });
        }
        if values.iter().any(|&v| v >= self.t) {
            return Err(Error::InvalidParameter("table value >= t".into()));
        }
        self.tables = values;
        Ok(self)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_keys(&self) -> usize {
        self.n_keys
    }

    pub fn num_chunks(&self) -> usize {
        self.num_chunks
    }

    pub fn splitter_generation(&self) -> u32 {
        self.splitter_generation
    }

    pub fn r_tab(&self) -> usize {
        self.r_tab
    }

    pub fn modulus(&self) -> u64 {
        self.t
    }

    pub fn num_functions(&self) -> usize {
        self.num_functions
    }

    pub fn pair_attempts(&self) -> &[u32] {
        &self.pair_attempts
    }

    /// Shared table entries, `2 * r_tab * L`.
    pub fn table_len(&self) -> usize {
        self.tables.len()
    }

    pub fn chunk_of(&self, key: &[u8]) -> usize {
        let splitter = SeededHasher::new(generation_seed(self.seed, self.splitter_generation), SPLIT_INDEX);
        reduce(splitter.hash(key), self.num_chunks as u64) as usize
    }

    /// Table positions `(h0(x), h1(x))` used by `chunk` for `key`.
    pub fn pair_positions(&self, chunk: usize, key: &[u8]) -> (usize, usize) {
        let d = digest(self.seed, key);
        let att = self.pair_attempts[chunk];
        (
            multiply_shift(self.seed, chunk, att, 0, d, self.r_tab),
            multiply_shift(self.seed, chunk, att, 1, d, self.r_tab),
        )
    }

    /// `h'_{chunk, j}(key)` for `1 <= j <= L`.
    pub fn eval(&self, chunk: usize, j: usize, key: &[u8]) -> Result<u64> {
        if chunk >= self.num_chunks {
            return Err(Error::IndexOutOfRange {
                index: chunk,
                len: self.num_chunks,
            });
        }
        if j == 0 || j > self.num_functions {
            return Err(Error::IndexOutOfRange {
                index: j,
                len: self.num_functions,
            });
        }
        let (p0, p1) = self.pair_positions(chunk, key);
        Ok(self.eval_at(j, p0, p1))
    }

    #[inline]
    fn eval_at(&self, j: usize, p0: usize, p1: usize) -> u64 {
        let base = (j - 1) * 2 * self.r_tab;
        let sum = u128::from(self.tables[base + p0]) + u128::from(self.tables[base + self.r_tab + p1]);
        (sum % u128::from(self.t)) as u64
    }

    /// Hash functions `first_j, first_j + 1, ...` restricted to `chunk`.
    pub fn source(&self, chunk: usize, first_j: usize) -> ChunkSource<'_> {
        ChunkSource {
            tables: self,
            chunk,
            first_j,
        }
    }
}

fn random_tables(seed: u64, num_functions: usize, r_tab: usize, t: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..num_functions * 2 * r_tab).map(|_| rng.gen_range(0..t)).collect()
}

/// [`HashSource`] backed by one chunk's simulated functions.
#[derive(Debug, Clone, Copy)]
pub struct ChunkSource<'a> {
    tables: &'a SplitShareTables,
    chunk: usize,
    first_j: usize,
}

impl HashSource for ChunkSource<'_> {
    #[inline]
    fn draw(&self, key: &[u8], ell: usize, range: u64) -> u64 {
        let (p0, p1) = self.tables.pair_positions(self.chunk, key);
        let v = self.tables.eval_at(self.first_j + ell - 1, p0, p1);
        ((u128::from(v) * u128::from(range)) / u128::from(self.tables.t)) as u64
    }
}
