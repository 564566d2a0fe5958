//! Retrieval with `k` probes into a table of `m = ceil((1 + delta) n)`
//! entries: the value of a key is the XOR of the entries at its probe set.

use crate::container::{BitWriter, ByteReader, ByteWriter, Container, Kind, Persist, FIXED_HEADER_BYTES};
use crate::error::{Error, Result};
use crate::gf2::{value_mask, Factorization, SparseRows};
use crate::hashing::{for_each_distinct, generation_seed, SeededFamily, SplitShareTables};
use crate::input::{check_width, normalize, scaled_len};
use crate::rank::RankBitvector;
use crate::threshold::warn_if_above_threshold;

/// Default number of hash-function generations tried before giving up.
pub const DEFAULT_RETRIES: u32 = 64;

/// Generations available to each chunk under split-and-share.
pub const CHUNK_GENERATIONS: usize = 24;

const SHARED_MODULUS: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrievalParams {
    pub k: usize,
    pub delta: f64,
    pub seed: u64,
    pub max_generations: u32,
    /// Draw probe sets from split-and-share tables instead of the PRF.
    pub split_share: bool,
}

impl Default for RetrievalParams {
    fn default() -> Self {
        Self {
            k: 3,
            delta: 0.25,
            seed: 0,
            max_generations: DEFAULT_RETRIES,
            split_share: false,
        }
    }
}

impl RetrievalParams {
    pub fn new(k: usize, delta: f64, seed: u64) -> Self {
        Self {
            k,
            delta,
            seed,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > 255 {
            return Err(Error::InvalidParameter(format!("k = {} outside 1..=255", self.k)));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::InvalidParameter(format!("delta = {} must be positive", self.delta)));
        }
        if self.max_generations == 0 {
            return Err(Error::InvalidParameter("max_generations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Table length for `n` keys: `ceil((1 + delta) n)`, raised to `n + k - 1`
/// for tiny `n`, where fewer columns would force repeated rows.
pub fn table_len(n: usize, k: usize, delta: f64) -> usize {
    scaled_len(1.0 + delta, n).max(n + k.max(1) - 1).max(k)
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct ChunkLayout {
    tables: SplitShareTables,
    /// Table offset of each chunk's segment, plus the total length.
    offsets: Vec<usize>,
    generations: Vec<u8>,
}

/// Everything that maps a key to its probe positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Addressing {
    pub(crate) k: usize,
    pub(crate) m: usize,
    pub(crate) seed: u64,
    pub(crate) generation: u32,
    chunks: Option<Box<ChunkLayout>>,
}

impl Addressing {
    pub(crate) fn global(k: usize, m: usize, seed: u64, generation: u32) -> Self {
        Self {
            k,
            m,
            seed,
            generation,
            chunks: None,
        }
    }

    pub(crate) fn chunks_present(&self) -> bool {
        self.chunks.is_some()
    }

    /// Calls `f` with the `k` table positions of `key`.
    #[inline]
    pub(crate) fn for_each_probe<F: FnMut(usize)>(&self, key: &[u8], mut f: F) {
        match &self.chunks {
            None => {
                let fam = SeededFamily::new(generation_seed(self.seed, self.generation), 1);
                for_each_distinct(key, self.k, self.m, &fam, f).expect("k <= m by construction");
            }
            Some(c) => {
                let i = c.tables.chunk_of(key);
                let (lo, hi) = (c.offsets[i], c.offsets[i + 1]);
                if hi == lo {
                    return;
                }
                let src = c.tables.source(i, usize::from(c.generations[i]) * self.k + 1);
                for_each_distinct(key, self.k, hi - lo, &src, |j| f(lo + j)).expect("k <= chunk length");
            }
        }
    }

    pub(crate) fn probes(&self, key: &[u8]) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.k);
        self.for_each_probe(key, |j| out.push(j));
        out
    }

    #[inline]
    pub(crate) fn xor_probes(&self, key: &[u8], table: &[u64]) -> u64 {
        let mut acc = 0;
        self.for_each_probe(key, |j| acc ^= table[j]);
        acc
    }

    pub(crate) fn encode(&self, w: &mut ByteWriter) {
        match &self.chunks {
            None => {
                w.u8(0);
            }
            Some(c) => {
                let t = &c.tables;
                w.u8(1)
                    .u64(t.num_functions() as u64)
                    .u64(t.modulus())
                    .u32(t.num_chunks() as u32)
                    .u32(t.r_tab() as u32)
                    .u32(t.splitter_generation())
                    .u64(t.n_keys() as u64);
                for i in 0..t.num_chunks() {
                    w.u8(t.pair_attempts()[i] as u8)
                        .u8(c.generations[i])
                        .u32((c.offsets[i + 1] - c.offsets[i]) as u32);
                }
            }
        }
    }

    pub(crate) fn decode(rd: &mut ByteReader<'_>, k: usize, m: usize, seed: u64, generation: u32) -> Result<Self> {
        let chunks = match rd.u8()? {
            0 => None,
            1 => {
                let num_functions = rd.u64()? as usize;
                let t = rd.u64()?;
                let num_chunks = rd.u32()? as usize;
                let r_tab = rd.u32()? as usize;
                let splitter_generation = rd.u32()?;
                let n_keys = rd.u64()? as usize;
                let mut attempts = Vec::with_capacity(num_chunks.min(1 << 20));
                let mut generations = Vec::with_capacity(num_chunks.min(1 << 20));
                let mut offsets = vec![0usize];
                for _ in 0..num_chunks {
                    attempts.push(u32::from(rd.u8()?));
                    let g = rd.u8()?;
                    if usize::from(g) * k + k > num_functions {
                        return Err(Error::Malformed("chunk generation beyond shared tables".into()));
                    }
                    generations.push(g);
                    let len = rd.u32()? as usize;
                    if len != 0 && len < k {
                        return Err(Error::Malformed("chunk shorter than k".into()));
                    }
                    offsets.push(offsets.last().expect("nonempty") + len);
                }
                if *offsets.last().expect("nonempty") != m {
                    return Err(Error::Malformed("chunk lengths do not sum to m".into()));
                }
                let tables = SplitShareTables::from_parts(
                    seed,
                    n_keys,
                    num_chunks,
                    splitter_generation,
                    r_tab,
                    t,
                    num_functions,
                    attempts,
                )?;
                Some(Box::new(ChunkLayout {
                    tables,
                    offsets,
                    generations,
                }))
            }
            other => return Err(Error::Malformed(format!("unknown layout {other}"))),
        };
        if chunks.is_none() && (k == 0 || k > m) {
            return Err(Error::Malformed(format!("k = {k} with m = {m}")));
        }
        Ok(Self {
            k,
            m,
            seed,
            generation,
            chunks,
        })
    }
}

/// Rows of the probe sets of `keys` under generation `generation`.
pub(crate) fn global_rows(keys: &[&[u8]], k: usize, m: usize, seed: u64, generation: u32) -> SparseRows {
    let addr = Addressing::global(k, m, seed, generation);
    let mut rows = SparseRows::with_capacity(m, keys.len(), keys.len() * k);
    let mut buf = Vec::with_capacity(k);
    for key in keys {
        buf.clear();
        addr.for_each_probe(key, |j| buf.push(j));
        rows.push_row(&buf);
    }
    rows
}

/// A full-row-rank system together with the generation that produced it.
pub(crate) struct GlobalSystem {
    pub(crate) generation: u32,
    pub(crate) rows: SparseRows,
    pub(crate) fact: Factorization,
}

/// Tries generations `0..max_generations` until the rows have full rank.
pub(crate) fn solve_global(
    keys: &[&[u8]],
    k: usize,
    m: usize,
    seed: u64,
    max_generations: u32,
) -> Result<GlobalSystem> {
    if k > m {
        return Err(Error::KTooLarge { k, m });
    }
    for generation in 0..max_generations {
        let rows = global_rows(keys, k, m, seed, generation);
        match Factorization::new(&rows) {
            Ok(fact) => {
                return Ok(GlobalSystem {
                    generation,
                    rows,
                    fact,
                })
            }
            Err(Error::SingularMatrix) => {
                log::debug!("generation {generation} singular, retrying");
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::RandomnessExhausted {
        attempts: max_generations,
    })
}

/// Static function from byte-string keys to `r`-bit values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetrievalStructure {
    n: usize,
    r: u32,
    addr: Addressing,
    table: Vec<u64>,
}

impl RetrievalStructure {
    pub fn build<K: AsRef<[u8]>>(pairs: &[(K, u64)], r: u32, params: &RetrievalParams) -> Result<Self> {
        Ok(Self::build_with_pivots(pairs, r, params)?.0)
    }

    /// Like [`RetrievalStructure::build`], also returning the pivot columns
    /// (the only table positions that may be nonzero).
    pub fn build_with_pivots<K: AsRef<[u8]>>(
        pairs: &[(K, u64)],
        r: u32,
        params: &RetrievalParams,
    ) -> Result<(Self, Vec<usize>)> {
        params.validate()?;
        let (keys, values) = normalize(pairs, r)?;
        let n = keys.len();
        if params.split_share {
            return Self::build_chunked(&keys, &values, r, params);
        }
        let m = table_len(n, params.k, params.delta);
        warn_if_above_threshold(params.k, n, m);
        let sys = solve_global(&keys, params.k, m, params.seed, params.max_generations)?;
        let table = sys.fact.solve(&sys.rows, &values)?;
        let pivots = sys.fact.pivots();
        let addr = Addressing::global(params.k, m, params.seed, sys.generation);
        Ok((Self { n, r, addr, table }, pivots))
    }

    fn build_chunked(keys: &[&[u8]], values: &[u64], r: u32, params: &RetrievalParams) -> Result<(Self, Vec<usize>)> {
        let k = params.k;
        let n = keys.len();
        let tables = SplitShareTables::build(keys, k * CHUNK_GENERATIONS, SHARED_MODULUS, params.seed)?;
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); tables.num_chunks()];
        for (i, key) in keys.iter().enumerate() {
            members[tables.chunk_of(key)].push(i);
        }
        let mut offsets = vec![0usize];
        let mut generations = Vec::with_capacity(members.len());
        let mut table = Vec::new();
        let mut pivots = Vec::with_capacity(n);
        let mut buf = Vec::with_capacity(k);
        for (chunk, idx) in members.iter().enumerate() {
            let base = *offsets.last().expect("nonempty");
            if idx.is_empty() {
                offsets.push(base);
                generations.push(0);
                continue;
            }
            let len = table_len(idx.len(), k, params.delta);
            let chunk_values: Vec<u64> = idx.iter().map(|&i| values[i]).collect();
            let mut solved = None;
            for g in 0..CHUNK_GENERATIONS {
                let src = tables.source(chunk, g * k + 1);
                let mut rows = SparseRows::with_capacity(len, idx.len(), idx.len() * k);
                for &i in idx {
                    buf.clear();
                    for_each_distinct(keys[i], k, len, &src, |j| buf.push(j))?;
                    rows.push_row(&buf);
                }
                if let Ok(fact) = Factorization::new(&rows) {
                    solved = Some((g, fact.solve(&rows, &chunk_values)?, fact.pivots()));
                    break;
                }
            }
            let Some((g, seg, piv)) = solved else {
                return Err(Error::RandomnessExhausted {
                    attempts: CHUNK_GENERATIONS as u32,
                });
            };
            table.extend_from_slice(&seg);
            pivots.extend(piv.into_iter().map(|p| base + p));
            generations.push(g as u8);
            offsets.push(base + len);
        }
        let m = table.len();
        let generation = tables.splitter_generation();
        let addr = Addressing {
            k,
            m,
            seed: params.seed,
            generation,
            chunks: Some(Box::new(ChunkLayout {
                tables,
                offsets,
                generations,
            })),
        };
        Ok((Self { n, r, addr, table }, pivots))
    }

    #[inline]
    pub fn query(&self, key: &[u8]) -> u64 {
        self.addr.xor_probes(key, &self.table)
    }

    /// Table positions probed for `key`.
    pub fn probes(&self, key: &[u8]) -> Vec<usize> {
        self.addr.probes(key)
    }

    pub fn verify<K: AsRef<[u8]>>(&self, pairs: &[(K, u64)]) -> bool {
        pairs.iter().all(|(k, v)| self.query(k.as_ref()) == *v)
    }

    /// Replaces the table; entries must fit in `r` bits.
    pub fn with_table(mut self, table: Vec<u64>) -> Result<Self> {
        if table.len() != self.addr.m {
            return Err(Error::DimensionMismatch {
                expected: self.addr.m,
                actual: table.len(),
            });
        }
        let mask = value_mask(self.r);
        if let Some(&v) = table.iter().find(|&&v| v & !mask != 0) {
            return Err(Error::ValueTooWide { value: v, bits: self.r });
        }
        self.table = table;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.addr.m
    }

    pub fn k(&self) -> usize {
        self.addr.k
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn seed(&self) -> u64 {
        self.addr.seed
    }

    /// Index of the hash-function generation that succeeded (for the
    /// split-and-share layout, the splitter's generation).
    pub fn seed_generation(&self) -> u32 {
        self.addr.generation
    }

    pub fn is_split_share(&self) -> bool {
        self.addr.chunks.is_some()
    }

    /// Per-chunk generations under split-and-share.
    pub fn chunk_generations(&self) -> Option<&[u8]> {
        self.addr.chunks.as_ref().map(|c| c.generations.as_slice())
    }

    pub fn table(&self) -> &[u64] {
        &self.table
    }

    /// `m * r`.
    pub fn table_bits(&self) -> u64 {
        self.addr.m as u64 * u64::from(self.r)
    }

    pub fn header_bits(&self) -> u64 {
        let mut w = ByteWriter::new();
        self.addr.encode(&mut w);
        ((FIXED_HEADER_BYTES + w.into_inner().len()) * 8) as u64
    }

    /// Table bits plus serialized header bits.
    pub fn space_bits(&self) -> u64 {
        self.table_bits() + self.header_bits()
    }

    /// Keeps only the entries at `pivots` and a rank bitvector marking them.
    pub fn compress(&self, pivots: &[usize]) -> Result<CompressedRetrieval> {
        let m = self.addr.m;
        if pivots.len() != self.n {
            return Err(Error::PivotMismatch);
        }
        let membership = RankBitvector::from_positions(m, pivots.iter().copied()).map_err(|_| Error::PivotMismatch)?;
        if membership.count_ones() != self.n {
            return Err(Error::PivotMismatch);
        }
        let mut base = Vec::with_capacity(self.n);
        for (j, &v) in self.table.iter().enumerate() {
            if membership.get(j) {
                base.push(v);
            } else if v != 0 {
                return Err(Error::PivotMismatch);
            }
        }
        Ok(CompressedRetrieval {
            n: self.n,
            r: self.r,
            addr: self.addr.clone(),
            base,
            membership,
        })
    }
}

impl Persist for RetrievalStructure {
    fn to_container(&self) -> Container {
        let mut ks = ByteWriter::new();
        self.addr.encode(&mut ks);
        let mut w = BitWriter::new();
        w.push_all(&self.table, self.r);
        let (payload, payload_bits) = w.finish();
        Container {
            kind: Kind::Basic,
            k: self.addr.k as u8,
            r: self.r as u8,
            n: self.n as u64,
            m: self.addr.m as u64,
            master_seed: self.addr.seed,
            seed_generation: self.addr.generation,
            kind_specific: ks.into_inner(),
            payload_bits,
            payload,
        }
    }

    fn from_container(c: &Container) -> Result<Self> {
        c.expect_kind(Kind::Basic)?;
        let (addr, r) = decode_header(c)?;
        let mut rd = c.payload_reader();
        let table = rd.read_vec(addr.m, r)?;
        rd.finish()?;
        Ok(Self {
            n: c.n as usize,
            r,
            addr,
            table,
        })
    }
}

/// Addressing and value width from a basic-retrieval header.
pub(crate) fn decode_header(c: &Container) -> Result<(Addressing, u32)> {
    let r = u32::from(c.r);
    check_width(r).map_err(|e| Error::Malformed(e.to_string()))?;
    let mut rd = ByteReader::new(&c.kind_specific);
    let addr = Addressing::decode(&mut rd, usize::from(c.k), c.m as usize, c.master_seed, c.seed_generation)?;
    rd.finish()?;
    if c.n > c.m {
        return Err(Error::Malformed("n exceeds m".into()));
    }
    Ok((addr, r))
}

/// Retrieval keeping only the `n` significant table entries; a probe reads
/// its entry through a rank query, or contributes 0 off the pivots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressedRetrieval {
    n: usize,
    r: u32,
    addr: Addressing,
    base: Vec<u64>,
    membership: RankBitvector,
}

impl CompressedRetrieval {
    pub fn query(&self, key: &[u8]) -> u64 {
        let mut acc = 0;
        self.addr.for_each_probe(key, |j| {
            if self.membership.get(j) {
                acc ^= self.base[self.membership.rank1_unchecked(j)];
            }
        });
        acc
    }

    pub fn base(&self) -> &[u64] {
        &self.base
    }

    pub fn membership(&self) -> &RankBitvector {
        &self.membership
    }

    /// `n * r` value bits plus the bitvector and its rank index.
    pub fn total_bits(&self) -> u64 {
        self.n as u64 * u64::from(self.r) + self.membership.total_bits() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(n: usize, r: u32, salt: u64) -> Vec<(Vec<u8>, u64)> {
        (0..n as u64)
            .map(|i| {
                let v = crate::hashing::mix64(i ^ salt) & value_mask(r);
                (format!("key-{i}").into_bytes(), v)
            })
            .collect()
    }

    #[test]
    fn single_key() {
        let p = vec![(b"only".to_vec(), 0xab)];
        let d = RetrievalStructure::build(&p, 8, &RetrievalParams::new(2, 1.0, 1)).unwrap();
        assert_eq!(d.seed_generation(), 0);
        assert_eq!(d.m(), 2);
        assert!(d.verify(&p));
    }

    #[test]
    fn zero_values_verify() {
        let p: Vec<_> = pairs(200, 8, 0).into_iter().map(|(k, _)| (k, 0)).collect();
        let d = RetrievalStructure::build(&p, 8, &RetrievalParams::default()).unwrap();
        assert!(d.verify(&p));
        assert!(d.table().iter().all(|&v| v == 0));
    }

    #[test]
    fn thousand_keys() {
        let p = pairs(1000, 8, 7);
        let d = RetrievalStructure::build(&p, 8, &RetrievalParams::new(3, 0.25, 42)).unwrap();
        assert!(d.verify(&p));
        assert_eq!(d.m(), 1250);
        assert_eq!(d.table_bits(), 1250 * 8);
        assert_eq!(d.space_bits(), d.table_bits() + d.header_bits());
        assert!(d.seed_generation() <= 2);
    }

    #[test]
    fn small_sizes_exhaustive() {
        for n in 1..=64 {
            for seed in 0..4 {
                let p = pairs(n, 5, seed);
                let d = RetrievalStructure::build(&p, 5, &RetrievalParams::new(3, 0.3, seed)).unwrap();
                assert!(d.verify(&p), "n = {n}, seed = {seed}");
            }
        }
    }

    #[test]
    fn xor_of_probes() {
        let p = pairs(5, 8, 0);
        let d = RetrievalStructure::build(&p, 8, &RetrievalParams::new(3, 1.0, 0)).unwrap();
        let mut t = vec![0u64; d.m()];
        t[2] = 0x0f;
        t[5] = 0xf0;
        t[7] = 0xff;
        let d = d.with_table(t).unwrap();
        // Any key whose probe set is {2, 5, 7} reads 0x00.
        for i in 0..20_000u32 {
            let key = i.to_le_bytes();
            let mut pr = d.probes(&key);
            pr.sort_unstable();
            if pr == [2, 5, 7] {
                assert_eq!(d.query(&key), 0);
            }
            if pr.iter().all(|&j| ![2, 5, 7].contains(&j)) {
                assert_eq!(d.query(&key), 0);
            }
        }
    }

    #[test]
    fn zero_table_queries_zero() {
        let p = pairs(50, 8, 1);
        let d = RetrievalStructure::build(&p, 8, &RetrievalParams::default()).unwrap();
        let m = d.m();
        let d = d.with_table(vec![0; m]).unwrap();
        assert!((0..100u32).all(|i| d.query(&i.to_le_bytes()) == 0));
    }

    #[test]
    fn flipped_entry_detected() {
        let p = pairs(300, 8, 2);
        let (d, pivots) = RetrievalStructure::build_with_pivots(&p, 8, &RetrievalParams::default()).unwrap();
        let mut t = d.table().to_vec();
        t[pivots[17]] ^= 1;
        let bad = d.clone().with_table(t).unwrap();
        assert!(!bad.verify(&p));
        assert!(d.verify::<Vec<u8>>(&[]));
    }

    #[test]
    fn duplicate_keys_rejected() {
        let p = vec![(b"a".to_vec(), 1), (b"a".to_vec(), 2)];
        assert_eq!(
            RetrievalStructure::build(&p, 8, &RetrievalParams::default()),
            Err(Error::DuplicateKeys { index: 1 })
        );
    }

    #[test]
    fn exhausted_below_threshold() {
        // Ratio n/m = 1/1.01 with k = 2 is far past the k = 2 threshold of 1/2.
        let p = pairs(2000, 8, 3);
        let mut params = RetrievalParams::new(2, 0.01, 0);
        params.max_generations = 3;
        assert_eq!(
            RetrievalStructure::build(&p, 8, &params),
            Err(Error::RandomnessExhausted { attempts: 3 })
        );
    }

    #[test]
    fn order_normalized_determinism() {
        let p = pairs(500, 8, 4);
        let mut q = p.clone();
        q.reverse();
        let a = RetrievalStructure::build(&p, 8, &RetrievalParams::default()).unwrap();
        let b = RetrievalStructure::build(&q, 8, &RetrievalParams::default()).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
    }

    #[test]
    fn success_independent_of_values() {
        for seed in 0..10 {
            let params = RetrievalParams::new(3, 0.1, seed);
            let a = RetrievalStructure::build(&pairs(400, 8, 1), 8, &params);
            let b = RetrievalStructure::build(&pairs(400, 8, 99), 8, &params);
            assert_eq!(a.map(|d| d.seed_generation()), b.map(|d| d.seed_generation()));
        }
    }

    #[test]
    fn compress_cross_check() {
        let p = pairs(2000, 8, 5);
        let (d, pivots) = RetrievalStructure::build_with_pivots(&p, 8, &RetrievalParams::default()).unwrap();
        let c = d.compress(&pivots).unwrap();
        assert_eq!(c.membership().count_ones(), 2000);
        for i in 0..10_000u32 {
            let key = format!("key-{i}").into_bytes();
            assert_eq!(c.query(&key), d.query(&key));
        }
        let mut wrong = pivots.clone();
        wrong.pop();
        assert_eq!(d.compress(&wrong), Err(Error::PivotMismatch));
    }

    #[test]
    fn compress_single_key() {
        let p = vec![(b"x".to_vec(), 5)];
        let (d, pivots) = RetrievalStructure::build_with_pivots(&p, 4, &RetrievalParams::default()).unwrap();
        let c = d.compress(&pivots).unwrap();
        assert_eq!(c.membership().count_ones(), 1);
        assert_eq!(c.query(b"x"), 5);
    }

    #[test]
    fn split_share_layout() {
        let p = pairs(3000, 8, 6);
        let mut params = RetrievalParams::default();
        params.split_share = true;
        let (d, pivots) = RetrievalStructure::build_with_pivots(&p, 8, &params).unwrap();
        assert!(d.is_split_share());
        assert!(d.verify(&p));
        let c = d.compress(&pivots).unwrap();
        assert!((0..3000u32).all(|i| {
            let key = format!("key-{i}").into_bytes();
            c.query(&key) == d.query(&key)
        }));
        let back = RetrievalStructure::from_bytes(&d.to_bytes()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn serialization_round_trip() {
        for n in [0, 1, 10, 1000] {
            let p = pairs(n, 13, 8);
            let d = RetrievalStructure::build(&p, 13, &RetrievalParams::default()).unwrap();
            let bytes = d.to_bytes();
            let back = RetrievalStructure::from_bytes(&bytes).unwrap();
            assert!(back.verify(&p));
            assert_eq!(back.to_bytes(), bytes);
        }
    }
}
