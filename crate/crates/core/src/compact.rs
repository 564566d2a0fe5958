//! Retrieval with a square system (`m = n`): each key gets a random number
//! of probes drawn from a truncated binomial, and the whole system is
//! redrawn until it is regular.

use crate::container::{BitWriter, ByteReader, ByteWriter, Container, Kind, Persist, FIXED_HEADER_BYTES};
use crate::error::{Error, Result};
use crate::gf2::{Factorization, SparseRows};
use crate::hashing::{
    build_binomial_table, cooper_parameters, for_each_distinct, generation_seed, ConditionedBinomialTable,
    SeededFamily, SeededHasher,
};
use crate::input::normalize;
use crate::retrieval::{RetrievalParams, RetrievalStructure};

/// Below this many keys the square construction is replaced by basic retrieval.
pub const MIN_COMPACT_KEYS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompactParams {
    pub seed: u64,
    /// Attempts before giving up; `None` means `ceil(8 ln n)`.
    pub trial_cap: Option<u32>,
    /// Parameters of the basic structure used for tiny inputs.
    pub fallback: RetrievalParams,
}

impl Default for CompactParams {
    fn default() -> Self {
        Self {
            seed: 0,
            trial_cap: None,
            fallback: RetrievalParams::default(),
        }
    }
}

impl CompactParams {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            fallback: RetrievalParams {
                seed,
                ..RetrievalParams::default()
            },
            ..Self::default()
        }
    }
}

pub fn default_trial_cap(n: usize) -> u32 {
    ((8.0 * (n.max(2) as f64).ln()).ceil() as u32).max(1)
}

#[derive(Debug, Clone, PartialEq)]
enum Body {
    Square { binom: ConditionedBinomialTable, table: Vec<u64> },
    Fallback(RetrievalStructure),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompactRetrieval {
    n: usize,
    r: u32,
    seed: u64,
    seed_index: u32,
    trial_cap: u32,
    body: Body,
}

fn square_table(n: usize) -> Result<ConditionedBinomialTable> {
    let (p, lo, hi) = cooper_parameters(n as u64);
    build_binomial_table(n as u64, p, lo, hi)
}

/// Probe count for `key` under trial seed `trial_seed`.
fn weight(binom: &ConditionedBinomialTable, trial_seed: u64, key: &[u8]) -> usize {
    binom.sample_fraction(SeededHasher::new(trial_seed, 0).hash(key))
}

fn square_rows(keys: &[&[u8]], binom: &ConditionedBinomialTable, trial_seed: u64) -> Result<SparseRows> {
    let n = keys.len();
    let fam = SeededFamily::new(trial_seed, 1);
    let mut rows = SparseRows::with_capacity(n, n, n * (binom.hi() + binom.lo()) / 2);
    let mut buf = Vec::with_capacity(binom.hi());
    for key in keys {
        buf.clear();
        let kx = weight(binom, trial_seed, key);
        for_each_distinct(key, kx, n, &fam, |j| buf.push(j))?;
        rows.push_row(&buf);
    }
    Ok(rows)
}

/// Whether attempt `trial` for `keys` (with `seed`) gives a regular matrix.
pub fn attempt_is_regular<K: AsRef<[u8]>>(keys: &[K], seed: u64, trial: u32) -> Result<bool> {
    let pairs: Vec<(&[u8], u64)> = keys.iter().map(|k| (k.as_ref(), 0)).collect();
    let (keys, _) = normalize(&pairs, 1)?;
    let binom = square_table(keys.len())?;
    let rows = square_rows(&keys, &binom, generation_seed(seed, trial))?;
    match Factorization::new(&rows) {
        Ok(_) => Ok(true),
        Err(Error::SingularMatrix) => Ok(false),
        Err(e) => Err(e),
    }
}

impl CompactRetrieval {
    pub fn build<K: AsRef<[u8]>>(pairs: &[(K, u64)], r: u32, params: &CompactParams) -> Result<Self> {
        let (keys, values) = normalize(pairs, r)?;
        let n = keys.len();
        if n < MIN_COMPACT_KEYS {
            let base = RetrievalStructure::build(pairs, r, &params.fallback)?;
            return Ok(Self {
                n,
                r,
                seed: base.seed(),
                seed_index: base.seed_generation(),
                trial_cap: base.seed_generation() + 1,
                body: Body::Fallback(base),
            });
        }
        let cap = params.trial_cap.unwrap_or_else(|| default_trial_cap(n));
        let binom = square_table(n)?;
        for trial in 0..cap {
            let trial_seed = generation_seed(params.seed, trial);
            let rows = square_rows(&keys, &binom, trial_seed)?;
            match Factorization::new(&rows) {
                Ok(fact) => {
                    let table = fact.solve(&rows, &values)?;
                    return Ok(Self {
                        n,
                        r,
                        seed: params.seed,
                        seed_index: trial,
                        trial_cap: cap,
                        body: Body::Square { binom, table },
                    });
                }
                Err(Error::SingularMatrix) => log::debug!("compact attempt {trial} singular"),
                Err(e) => return Err(e),
            }
        }
        Err(Error::RandomnessExhausted { attempts: cap })
    }

    /// Probe count `k(x)` of `key`, or `None` for the basic fallback.
    pub fn probe_count(&self, key: &[u8]) -> Option<usize> {
        match &self.body {
            Body::Square { binom, .. } => Some(weight(binom, generation_seed(self.seed, self.seed_index), key)),
            Body::Fallback(_) => None,
        }
    }

    pub fn query(&self, key: &[u8]) -> u64 {
        match &self.body {
            Body::Square { binom, table } => {
                let trial_seed = generation_seed(self.seed, self.seed_index);
                let kx = weight(binom, trial_seed, key);
                if kx < binom.lo() || kx > binom.hi() || kx > self.n {
                    return 0;
                }
                let fam = SeededFamily::new(trial_seed, 1);
                let mut acc = 0;
                for_each_distinct(key, kx, self.n, &fam, |j| acc ^= table[j]).expect("k(x) <= n");
                acc
            }
            Body::Fallback(base) => base.query(key),
        }
    }

    pub fn verify<K: AsRef<[u8]>>(&self, pairs: &[(K, u64)]) -> bool {
        pairs.iter().all(|(k, v)| self.query(k.as_ref()) == *v)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        match &self.body {
            Body::Square { table, .. } => table.len(),
            Body::Fallback(base) => base.m(),
        }
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Index of the successful attempt.
    pub fn seed_index(&self) -> u32 {
        self.seed_index
    }

    /// Attempt cap; for the basic fallback, the attempts it consumed.
    pub fn trial_cap(&self) -> u32 {
        self.trial_cap
    }

    pub fn is_fallback(&self) -> bool {
        matches!(self.body, Body::Fallback(_))
    }

    /// `(lo, hi)` bounds of the probe count, if square.
    pub fn weight_bounds(&self) -> Option<(usize, usize)> {
        match &self.body {
            Body::Square { binom, .. } => Some((binom.lo(), binom.hi())),
            Body::Fallback(_) => None,
        }
    }

    pub fn table(&self) -> &[u64] {
        match &self.body {
            Body::Square { table, .. } => table,
            Body::Fallback(base) => base.table(),
        }
    }

    pub fn table_bits(&self) -> u64 {
        self.m() as u64 * u64::from(self.r)
    }

    pub fn header_bits(&self) -> u64 {
        match &self.body {
            Body::Square { .. } => ((FIXED_HEADER_BYTES + SQUARE_SPECIFIC_BYTES) * 8) as u64,
            Body::Fallback(base) => base.header_bits() + 8,
        }
    }

    pub fn space_bits(&self) -> u64 {
        self.table_bits() + self.header_bits()
    }
}

/// Layout byte, `p`, `lo`, `hi`, trial cap.
const SQUARE_SPECIFIC_BYTES: usize = 1 + 8 + 4 + 4 + 4;

impl Persist for CompactRetrieval {
    fn to_container(&self) -> Container {
        match &self.body {
            Body::Square { binom, table } => {
                let mut ks = ByteWriter::new();
                ks.u8(0)
                    .f64(binom.p())
                    .u32(binom.lo() as u32)
                    .u32(binom.hi() as u32)
                    .u32(self.trial_cap);
                let mut w = BitWriter::new();
                w.push_all(table, self.r);
                let (payload, payload_bits) = w.finish();
                Container {
                    kind: Kind::Compact,
                    k: 0,
                    r: self.r as u8,
                    n: self.n as u64,
                    m: self.n as u64,
                    master_seed: self.seed,
                    seed_generation: self.seed_index,
                    kind_specific: ks.into_inner(),
                    payload_bits,
                    payload,
                }
            }
            Body::Fallback(base) => {
                let mut c = base.to_container();
                c.kind = Kind::Compact;
                c.kind_specific.insert(0, 1);
                c
            }
        }
    }

    fn from_container(c: &Container) -> Result<Self> {
        c.expect_kind(Kind::Compact)?;
        match c.kind_specific.first() {
            Some(0) => {
                let mut rd = ByteReader::new(&c.kind_specific[1..]);
                let p = rd.f64()?;
                let lo = rd.u32()? as usize;
                let hi = rd.u32()? as usize;
                let trial_cap = rd.u32()?;
                rd.finish()?;
                let n = c.n as usize;
                if c.m != c.n || n < MIN_COMPACT_KEYS {
                    return Err(Error::Malformed("compact table must be square".into()));
                }
                let binom = build_binomial_table(c.n, p, lo, hi).map_err(|e| Error::Malformed(e.to_string()))?;
                let r = u32::from(c.r);
                if !(1..=64).contains(&r) {
                    return Err(Error::Malformed(format!("r = {r}")));
                }
                let mut rd = c.payload_reader();
                let table = rd.read_vec(n, r)?;
                rd.finish()?;
                Ok(Self {
                    n,
                    r,
                    seed: c.master_seed,
                    seed_index: c.seed_generation,
                    trial_cap,
                    body: Body::Square { binom, table },
                })
            }
            Some(1) => {
                let mut inner = c.clone();
                inner.kind = Kind::Basic;
                inner.kind_specific.remove(0);
                let base = RetrievalStructure::from_container(&inner)?;
                Ok(Self {
                    n: base.n(),
                    r: base.r(),
                    seed: base.seed(),
                    seed_index: base.seed_generation(),
                    trial_cap: base.seed_generation() + 1,
                    body: Body::Fallback(base),
                })
            }
            _ => Err(Error::Malformed("unknown compact layout".into())),
        }
    }
}
