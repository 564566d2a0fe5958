//! Blocked retrieval with linear-time construction.
//!
//! A splitting hash sends each key to one of `m0 = ceil(n / b)` blocks.
//! Every block owns a segment of `segment_len = ceil((1 + delta) b')`
//! primary entries, `b' = ceil((1 + eps) b)`, and is solved once. Keys of
//! blocks that are too large or singular go to a 3-probe secondary
//! structure `f'`; succeeded segments store `f(x) ^ f'(x)`, failed
//! segments stay zero, so a query is the XOR of `k + 3` independent
//! probes in both cases.

use crate::container::{BitWriter, ByteReader, ByteWriter, Container, Kind, Persist, FIXED_HEADER_BYTES};
use crate::error::{Error, Result};
use crate::gf2::{Factorization, SparseRows};
use crate::hashing::{for_each_distinct, mix64, reduce, SeededFamily, SeededHasher};
use crate::input::{normalize, scaled_len};
use crate::retrieval::{solve_global, Addressing, DEFAULT_RETRIES};
use crate::threshold::warn_if_above_threshold;

/// Probes into the secondary table.
pub const SECONDARY_K: usize = 3;
/// Secondary table length per overflow key.
pub const SECONDARY_FACTOR: f64 = 1.3;

const SECONDARY_TAG: u64 = 0x5EC0_4DA7_0000_0003;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockedParams {
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
    /// Target keys per block.
    pub b: usize,
    pub seed: u64,
    pub secondary_retries: u32,
}

impl Default for BlockedParams {
    fn default() -> Self {
        Self {
            k: 3,
            eps: 0.1,
            delta: 0.3,
            b: 64,
            seed: 0,
            secondary_retries: DEFAULT_RETRIES,
        }
    }
}

impl BlockedParams {
    fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > 255 {
            return Err(Error::InvalidParameter(format!("k = {} outside 1..=255", self.k)));
        }
        if self.b < 8 {
            return Err(Error::InvalidParameter(format!("block size b = {} below 8", self.b)));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) || !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidParameter("eps must be >= 0 and delta > 0".into()));
        }
        if self.secondary_retries == 0 {
            return Err(Error::InvalidParameter("secondary_retries must be at least 1".into()));
        }
        Ok(())
    }

    /// `b' = ceil((1 + eps) b)`.
    pub fn block_capacity(&self) -> usize {
        scaled_len(1.0 + self.eps, self.b)
    }

    /// `ceil((1 + delta) b')`, at least `k`.
    pub fn segment_len(&self) -> usize {
        scaled_len(1.0 + self.delta, self.block_capacity()).max(self.k)
    }
}

/// Length of the secondary table for `n'` overflow keys.
pub fn secondary_len(overflow: usize) -> usize {
    if overflow == 0 {
        0
    } else {
        scaled_len(SECONDARY_FACTOR, overflow)
            .max(overflow + SECONDARY_K - 1)
            .max(SECONDARY_K)
    }
}

/// One entry of a probe plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Probe {
    /// Offset into the primary table.
    Primary(usize),
    /// Offset into the secondary table.
    Secondary(usize),
    /// Secondary probe of an empty secondary table (contributes 0).
    Skipped,
}

/// Counts gathered while building.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BlockedReport {
    pub blocks: usize,
    /// Blocks holding more than `b'` keys.
    pub oversized_blocks: usize,
    /// Blocks of admissible size whose matrix was singular.
    pub singular_blocks: usize,
    pub overflow_keys: usize,
    pub secondary_attempts: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockedRetrieval {
    n: usize,
    r: u32,
    k: usize,
    b: usize,
    eps: f64,
    delta: f64,
    m0: usize,
    b_prime: usize,
    segment_len: usize,
    seed: u64,
    overflow: usize,
    primary: Vec<u64>,
    secondary_addr: Option<Addressing>,
    secondary: Vec<u64>,
}

fn secondary_seed(seed: u64) -> u64 {
    mix64(seed ^ SECONDARY_TAG)
}

impl BlockedRetrieval {
    pub fn build<K: AsRef<[u8]>>(pairs: &[(K, u64)], r: u32, params: &BlockedParams) -> Result<Self> {
        Ok(Self::build_with_report(pairs, r, params, &[])?.0)
    }

    /// Builds and returns construction counts. Blocks listed in
    /// `forced_failures` are treated as singular (a testing aid).
    pub fn build_with_report<K: AsRef<[u8]>>(
        pairs: &[(K, u64)],
        r: u32,
        params: &BlockedParams,
        forced_failures: &[usize],
    ) -> Result<(Self, BlockedReport)> {
        params.validate()?;
        let (keys, values) = normalize(pairs, r)?;
        let n = keys.len();
        let k = params.k;
        let b_prime = params.block_capacity();
        let segment_len = params.segment_len();
        let m0 = n.div_ceil(params.b).max(1);
        warn_if_above_threshold(k, b_prime, segment_len);

        let mut s = Self {
            n,
            r,
            k,
            b: params.b,
            eps: params.eps,
            delta: params.delta,
            m0,
            b_prime,
            segment_len,
            seed: params.seed,
            overflow: 0,
            primary: vec![0; m0 * segment_len],
            secondary_addr: None,
            secondary: Vec::new(),
        };

        // Bucket keys by block (counting sort keeps input order within blocks).
        let block_of: Vec<usize> = keys.iter().map(|key| s.block_of(key)).collect();
        let mut starts = vec![0usize; m0 + 1];
        for &blk in &block_of {
            starts[blk + 1] += 1;
        }
        for i in 0..m0 {
            starts[i + 1] += starts[i];
        }
        let mut fill = starts.clone();
        let mut members = vec![0usize; n];
        for (i, &blk) in block_of.iter().enumerate() {
            members[fill[blk]] = i;
            fill[blk] += 1;
        }

        let mut report = BlockedReport {
            blocks: m0,
            ..BlockedReport::default()
        };
        let mut forced = vec![false; m0];
        for &blk in forced_failures {
            if blk < m0 {
                forced[blk] = true;
            }
        }
        let mut solvable = vec![false; m0];
        let mut rows = SparseRows::new(segment_len);
        for blk in 0..m0 {
            let idx = &members[starts[blk]..starts[blk + 1]];
            if idx.len() > b_prime {
                report.oversized_blocks += 1;
                continue;
            }
            s.block_rows(&keys, idx, &mut rows);
            if !forced[blk] && Factorization::new(&rows).is_ok() {
                solvable[blk] = true;
            } else {
                report.singular_blocks += 1;
            }
        }

        let overflow: Vec<usize> = (0..m0)
            .filter(|&blk| !solvable[blk])
            .flat_map(|blk| members[starts[blk]..starts[blk + 1]].iter().copied())
            .collect();
        s.overflow = overflow.len();
        report.overflow_keys = overflow.len();

        if !overflow.is_empty() {
            let m2 = secondary_len(overflow.len());
            let sec_keys: Vec<&[u8]> = overflow.iter().map(|&i| keys[i]).collect();
            let sec_values: Vec<u64> = overflow.iter().map(|&i| values[i]).collect();
            let sys = solve_global(
                &sec_keys,
                SECONDARY_K,
                m2,
                secondary_seed(params.seed),
                params.secondary_retries,
            )?;
            report.secondary_attempts = sys.generation + 1;
            s.secondary = sys.fact.solve(&sys.rows, &sec_values)?;
            s.secondary_addr = Some(Addressing::global(
                SECONDARY_K,
                m2,
                secondary_seed(params.seed),
                sys.generation,
            ));
        }

        for blk in (0..m0).filter(|&blk| solvable[blk]) {
            let idx = &members[starts[blk]..starts[blk + 1]];
            if idx.is_empty() {
                continue;
            }
            s.block_rows(&keys, idx, &mut rows);
            let fact = Factorization::new(&rows)?;
            let targets: Vec<u64> = idx
                .iter()
                .map(|&i| values[i] ^ s.secondary_value(keys[i]))
                .collect();
            let seg = fact.solve(&rows, &targets)?;
            let base = blk * segment_len;
            s.primary[base..base + segment_len].copy_from_slice(&seg);
        }
        Ok((s, report))
    }

    fn block_rows(&self, keys: &[&[u8]], idx: &[usize], rows: &mut SparseRows) {
        *rows = SparseRows::with_capacity(self.segment_len, idx.len(), idx.len() * self.k);
        let fam = self.primary_family();
        let mut buf = Vec::with_capacity(self.k);
        for &i in idx {
            buf.clear();
            for_each_distinct(keys[i], self.k, self.segment_len, &fam, |j| buf.push(j)).expect("k <= segment");
            rows.push_row(&buf);
        }
    }

    #[inline]
    fn primary_family(&self) -> SeededFamily {
        SeededFamily::new(self.seed, 1)
    }

    /// Block `phi(key)`.
    #[inline]
    pub fn block_of(&self, key: &[u8]) -> usize {
        reduce(SeededHasher::new(self.seed, 0).hash(key), self.m0 as u64) as usize
    }

    /// `f'(key)`: XOR of the secondary probes, or 0 without overflow.
    pub fn secondary_value(&self, key: &[u8]) -> u64 {
        match &self.secondary_addr {
            Some(addr) => addr.xor_probes(key, &self.secondary),
            None => 0,
        }
    }

    /// The `k + 3` table positions read by [`BlockedRetrieval::query`].
    pub fn probe_plan(&self, key: &[u8]) -> Vec<Probe> {
        let mut plan = Vec::with_capacity(self.k + SECONDARY_K);
        let base = self.block_of(key) * self.segment_len;
        for_each_distinct(key, self.k, self.segment_len, &self.primary_family(), |j| {
            plan.push(Probe::Primary(base + j))
        })
        .expect("k <= segment");
        match &self.secondary_addr {
            Some(addr) => addr.for_each_probe(key, |j| plan.push(Probe::Secondary(j))),
            None => plan.extend([Probe::Skipped; SECONDARY_K]),
        }
        plan
    }

    /// XOR of the entries named by `plan`.
    pub fn gather(&self, plan: &[Probe]) -> u64 {
        plan.iter().fold(0, |acc, p| match *p {
            Probe::Primary(j) => acc ^ self.primary[j],
            Probe::Secondary(j) => acc ^ self.secondary[j],
            Probe::Skipped => acc,
        })
    }

    #[inline]
    pub fn query(&self, key: &[u8]) -> u64 {
        let base = self.block_of(key) * self.segment_len;
        let seg = &self.primary[base..base + self.segment_len];
        let mut acc = 0;
        for_each_distinct(key, self.k, self.segment_len, &self.primary_family(), |j| acc ^= seg[j])
            .expect("k <= segment");
        acc ^ self.secondary_value(key)
    }

    pub fn verify<K: AsRef<[u8]>>(&self, pairs: &[(K, u64)]) -> bool {
        pairs.iter().all(|(k, v)| self.query(k.as_ref()) == *v)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn block_capacity(&self) -> usize {
        self.b_prime
    }

    pub fn segment_len(&self) -> usize {
        self.segment_len
    }

    pub fn blocks(&self) -> usize {
        self.m0
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `n'`, the number of keys stored through the secondary structure.
    pub fn overflow_count(&self) -> usize {
        self.overflow
    }

    pub fn overflow_fraction(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.overflow as f64 / self.n as f64
        }
    }

    pub fn primary_table(&self) -> &[u64] {
        &self.primary
    }

    pub fn secondary_table(&self) -> &[u64] {
        &self.secondary
    }

    /// Primary plus secondary table bits.
    pub fn table_bits(&self) -> u64 {
        (self.primary.len() + self.secondary.len()) as u64 * u64::from(self.r)
    }

    pub fn header_bits(&self) -> u64 {
        ((FIXED_HEADER_BYTES + BLOCKED_SPECIFIC_BYTES) * 8) as u64
    }

    pub fn space_bits(&self) -> u64 {
        self.table_bits() + self.header_bits()
    }

    /// Whether a block's segment is entirely zero (always true for failed blocks).
    pub fn segment_is_zero(&self, block: usize) -> bool {
        let base = block * self.segment_len;
        self.primary[base..base + self.segment_len].iter().all(|&v| v == 0)
    }
}

/// b, b', segment_len, m0, eps, delta, n', m', secondary generation.
const BLOCKED_SPECIFIC_BYTES: usize = 4 + 4 + 4 + 8 + 8 + 8 + 8 + 8 + 4;

impl Persist for BlockedRetrieval {
    fn to_container(&self) -> Container {
        let mut ks = ByteWriter::new();
        let (m2, gen2) = self
            .secondary_addr
            .as_ref()
            .map_or((0, 0), |a| (a.m, a.generation));
        ks.u32(self.b as u32)
            .u32(self.b_prime as u32)
            .u32(self.segment_len as u32)
            .u64(self.m0 as u64)
            .f64(self.eps)
            .f64(self.delta)
            .u64(self.overflow as u64)
            .u64(m2 as u64)
            .u32(gen2);
        let mut w = BitWriter::new();
        w.push_all(&self.primary, self.r);
        w.push_all(&self.secondary, self.r);
        let (payload, payload_bits) = w.finish();
        Container {
            kind: Kind::Blocked,
            k: self.k as u8,
            r: self.r as u8,
            n: self.n as u64,
            m: self.primary.len() as u64,
            master_seed: self.seed,
            seed_generation: gen2,
            kind_specific: ks.into_inner(),
            payload_bits,
            payload,
        }
    }

    fn from_container(c: &Container) -> Result<Self> {
        c.expect_kind(Kind::Blocked)?;
        let mut rd = ByteReader::new(&c.kind_specific);
        let b = rd.u32()? as usize;
        let b_prime = rd.u32()? as usize;
        let segment_len = rd.u32()? as usize;
        let m0 = rd.u64()? as usize;
        let eps = rd.f64()?;
        let delta = rd.f64()?;
        let overflow = rd.u64()? as usize;
        let m2 = rd.u64()? as usize;
        let gen2 = rd.u32()?;
        rd.finish()?;
        let k = usize::from(c.k);
        let r = u32::from(c.r);
        if !(1..=64).contains(&r) || k == 0 || k > segment_len {
            return Err(Error::Malformed("blocked parameters".into()));
        }
        if m0.checked_mul(segment_len) != Some(c.m as usize) || m0 == 0 {
            return Err(Error::Malformed("primary length != m0 * segment_len".into()));
        }
        if (overflow == 0) != (m2 == 0) || (m2 != 0 && m2 < SECONDARY_K) {
            return Err(Error::Malformed("secondary length".into()));
        }
        let mut bits = c.payload_reader();
        let primary = bits.read_vec(c.m as usize, r)?;
        let secondary = bits.read_vec(m2, r)?;
        bits.finish()?;
        let secondary_addr = (m2 > 0).then(|| Addressing::global(SECONDARY_K, m2, secondary_seed(c.master_seed), gen2));
        Ok(Self {
            n: c.n as usize,
            r,
            k,
            b,
            eps,
            delta,
            m0,
            b_prime,
            segment_len,
            seed: c.master_seed,
            overflow,
            primary,
            secondary_addr,
            secondary,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::value_mask;

    fn pairs(n: usize, r: u32, salt: u64) -> Vec<(Vec<u8>, u64)> {
        (0..n as u64)
            .map(|i| (format!("b{i}").into_bytes(), mix64(i ^ salt) & value_mask(r)))
            .collect()
    }

    #[test]
    fn single_block() {
        let p = pairs(40, 8, 0);
        let (d, rep) = BlockedRetrieval::build_with_report(&p, 8, &BlockedParams::default(), &[]).unwrap();
        assert_eq!(d.blocks(), 1);
        assert_eq!(rep.overflow_keys, 0);
        assert!(d.secondary_table().is_empty());
        assert!(d.verify(&p));
        assert!(d.probe_plan(&p[0].0).iter().filter(|p| **p == Probe::Skipped).count() == 3);
    }

    #[test]
    fn geometry() {
        let params = BlockedParams::default();
        assert_eq!(params.block_capacity(), 71);
        assert_eq!(params.segment_len(), 93);
        assert_eq!(secondary_len(0), 0);
        assert_eq!(secondary_len(1), 3);
        assert_eq!(secondary_len(100), 130);
    }

    #[test]
    fn forced_failure_uses_secondary() {
        let p = pairs(2000, 8, 1);
        let params = BlockedParams {
            seed: 5,
            ..BlockedParams::default()
        };
        let (d, rep) = BlockedRetrieval::build_with_report(&p, 8, &params, &[3]).unwrap();
        assert!(rep.overflow_keys > 0);
        assert!(d.segment_is_zero(3));
        assert!(d.verify(&p));
        for (key, v) in &p {
            if d.block_of(key) == 3 {
                let primary: u64 = d
                    .probe_plan(key)
                    .iter()
                    .filter(|p| matches!(p, Probe::Primary(_)))
                    .fold(0, |acc, p| acc ^ d.gather(&[*p]));
                assert_eq!(primary, 0);
                assert_eq!(d.secondary_value(key), *v);
            }
        }
    }

    #[test]
    fn plan_matches_query() {
        let p = pairs(5000, 8, 2);
        let d = BlockedRetrieval::build(&p, 8, &BlockedParams::default()).unwrap();
        assert!(d.verify(&p));
        for i in 0..10_000u32 {
            let key = format!("other-{i}").into_bytes();
            let plan = d.probe_plan(&key);
            assert_eq!(plan.len(), 6);
            let seg = d.block_of(&key) * d.segment_len();
            for pr in &plan[..3] {
                match pr {
                    Probe::Primary(j) => assert!((seg..seg + d.segment_len()).contains(j)),
                    other => panic!("{other:?}"),
                }
            }
            assert_eq!(d.gather(&plan), d.query(&key));
        }
    }

    #[test]
    fn empty_structure() {
        let p: Vec<(Vec<u8>, u64)> = Vec::new();
        let d = BlockedRetrieval::build(&p, 8, &BlockedParams::default()).unwrap();
        assert_eq!(d.query(b"anything"), 0);
        let back = BlockedRetrieval::from_bytes(&d.to_bytes()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn round_trip() {
        let p = pairs(3000, 6, 3);
        let d = BlockedRetrieval::build(&p, 6, &BlockedParams::default()).unwrap();
        let bytes = d.to_bytes();
        let back = BlockedRetrieval::from_bytes(&bytes).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.to_bytes(), bytes);
        assert_eq!(
            d.space_bits(),
            (d.primary_table().len() + d.secondary_table().len()) as u64 * 6 + d.header_bits()
        );
    }

    #[test]
    fn larger_delta_fails_less() {
        let p = pairs(20_000, 4, 4);
        let (mut small, mut large) = (0, 0);
        for seed in 0..20 {
            let mut params = BlockedParams {
                seed,
                delta: 0.15,
                ..BlockedParams::default()
            };
            small += BlockedRetrieval::build_with_report(&p, 4, &params, &[]).unwrap().1.singular_blocks;
            params.delta = 0.4;
            large += BlockedRetrieval::build_with_report(&p, 4, &params, &[]).unwrap().1.singular_blocks;
        }
        assert!(large <= small, "{large} > {small}");
    }
}
