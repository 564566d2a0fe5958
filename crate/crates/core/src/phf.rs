//! Perfect and minimal perfect hashing. A key's hash is one of its own
//! probe positions; which one is chosen by a retrieval table of
//! `ceil(log2 k)`-bit selectors built over the same probe sets.

use crate::container::{BitWriter, ByteWriter, Container, Kind, Persist, FIXED_HEADER_BYTES};
use crate::error::{Error, Result};
use crate::input::normalize_keys;
use crate::rank::RankBitvector;
use crate::retrieval::{decode_header, solve_global, table_len, Addressing, DEFAULT_RETRIES};
use crate::threshold::warn_if_above_threshold;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhfParams {
    pub k: usize,
    pub delta: f64,
    pub seed: u64,
    pub max_generations: u32,
}

impl Default for PhfParams {
    fn default() -> Self {
        Self {
            k: 4,
            delta: 0.035,
            seed: 0,
            max_generations: DEFAULT_RETRIES,
        }
    }
}

impl PhfParams {
    pub fn new(k: usize, delta: f64, seed: u64) -> Self {
        Self {
            k,
            delta,
            seed,
            ..Self::default()
        }
    }
}

/// `ceil(log2 k)`, the selector width.
pub fn selector_bits(k: usize) -> u32 {
    k.next_power_of_two().trailing_zeros()
}

/// Maximum matching in a bipartite graph given as adjacency lists of the
/// left vertices. Returns the partner of each left vertex or `NONE`.
fn hopcroft_karp(n_right: usize, offsets: &[usize], adj: &[usize]) -> Vec<usize> {
    let n_left = offsets.len() - 1;
    let mut ml = vec![NONE; n_left];
    let mut mr = vec![NONE; n_right];
    let mut dist = vec![NONE; n_left];
    let mut it = vec![0usize; n_left];
    let mut queue = Vec::with_capacity(n_left);
    let mut stack = Vec::new();
    loop {
        queue.clear();
        for u in 0..n_left {
            if ml[u] == NONE {
                dist[u] = 0;
                queue.push(u);
            } else {
                dist[u] = NONE;
            }
        }
        let mut found = false;
        let mut head = 0;
        while head < queue.len() {
            let u = queue[head];
            head += 1;
            for &v in &adj[offsets[u]..offsets[u + 1]] {
                match mr[v] {
                    NONE => found = true,
                    w if dist[w] == NONE => {
                        dist[w] = dist[u] + 1;
                        queue.push(w);
                    }
                    _ => {}
                }
            }
        }
        if !found {
            return ml;
        }
        it.copy_from_slice(&offsets[..n_left]);
        for s in 0..n_left {
            if ml[s] != NONE {
                continue;
            }
            stack.clear();
            stack.push(s);
            while let Some(&u) = stack.last() {
                if it[u] == offsets[u + 1] {
                    dist[u] = NONE;
                    stack.pop();
                    if let Some(&p) = stack.last() {
                        it[p] += 1;
                    }
                    continue;
                }
                let v = adj[it[u]];
                match mr[v] {
                    NONE => {
                        for &x in &stack {
                            let v = adj[it[x]];
                            ml[x] = v;
                            mr[v] = x;
                        }
                        break;
                    }
                    w if dist[w] != NONE && dist[w] == dist[u] + 1 => stack.push(w),
                    _ => it[u] += 1,
                }
            }
        }
    }
}

/// Injective map from the key set into `[m]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerfectHash {
    n: usize,
    addr: Addressing,
    r_lambda: u32,
    /// Selector `lambda - 1` is the XOR of the entries at a key's probes.
    table: Vec<u64>,
}

impl PerfectHash {
    pub fn build<K: AsRef<[u8]>>(keys: &[K], params: &PhfParams) -> Result<Self> {
        Self::build_with_positions(keys, params).map(|(p, _)| p)
    }

    /// Also returns the hash value of every key, in input order.
    fn build_with_positions<K: AsRef<[u8]>>(keys: &[K], params: &PhfParams) -> Result<(Self, Vec<usize>)> {
        let k = params.k;
        if !(2..=64).contains(&k) {
            return Err(Error::InvalidParameter(format!("k = {k} outside 2..=64")));
        }
        if !(params.delta >= 0.0) {
            return Err(Error::InvalidParameter(format!("delta = {}", params.delta)));
        }
        let sorted = normalize_keys(keys)?;
        let n = sorted.len();
        let m = table_len(n, k, params.delta);
        warn_if_above_threshold(k, n, m);
        let sys = solve_global(&sorted, k, m, params.seed, params.max_generations)?;

        let pivots = sys.fact.pivots();
        let mut pivot_index = vec![NONE; m];
        for (c, &p) in pivots.iter().enumerate() {
            pivot_index[p] = c;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut adj = Vec::with_capacity(n * k);
        offsets.push(0);
        for i in 0..n {
            adj.extend(sys.rows.row(i).iter().map(|&j| pivot_index[j as usize]).filter(|&c| c != NONE));
            offsets.push(adj.len());
        }
        let matching = hopcroft_karp(pivots.len(), &offsets, &adj);

        let mut values = Vec::with_capacity(n);
        let mut positions = Vec::with_capacity(n);
        for (i, &c) in matching.iter().enumerate() {
            if c == NONE {
                return Err(Error::PivotMismatch);
            }
            let phi = pivots[c];
            let lambda = sys.rows.row(i).iter().position(|&j| j as usize == phi).expect("pivot in row");
            values.push(lambda as u64);
            positions.push(phi);
        }
        let table = sys.fact.solve(&sys.rows, &values)?;
        let phf = Self {
            n,
            addr: Addressing::global(k, m, params.seed, sys.generation),
            r_lambda: selector_bits(k),
            table,
        };
        Ok((phf, positions))
    }

    /// Position in `[m]`; distinct for distinct construction keys.
    #[inline]
    pub fn eval(&self, key: &[u8]) -> usize {
        let k = self.addr.k;
        let mut buf = [0usize; 64];
        let mut len = 0;
        let mut sel = 0u64;
        self.addr.for_each_probe(key, |j| {
            buf[len] = j;
            len += 1;
            sel ^= self.table[j];
        });
        buf[sel as usize % k]
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

    pub fn seed(&self) -> u64 {
        self.addr.seed
    }

    pub fn seed_generation(&self) -> u32 {
        self.addr.generation
    }

    pub fn selector_bits(&self) -> u32 {
        self.r_lambda
    }

    pub fn table(&self) -> &[u64] {
        &self.table
    }

    /// `m * ceil(log2 k)`.
    pub fn table_bits(&self) -> u64 {
        self.addr.m as u64 * u64::from(self.r_lambda)
    }

    pub fn header_bits(&self) -> u64 {
        let mut w = ByteWriter::new();
        self.addr.encode(&mut w);
        ((FIXED_HEADER_BYTES + w.into_inner().len()) * 8) as u64
    }

    pub fn space_bits(&self) -> u64 {
        self.table_bits() + self.header_bits()
    }

    fn container(&self, kind: Kind, used: Option<&RankBitvector>) -> Container {
        let mut ks = ByteWriter::new();
        self.addr.encode(&mut ks);
        let mut w = BitWriter::new();
        w.push_all(&self.table, self.r_lambda);
        if let Some(u) = used {
            for i in 0..u.len() {
                w.push(u64::from(u.get(i)), 1);
            }
        }
        let (payload, payload_bits) = w.finish();
        Container {
            kind,
            k: self.addr.k as u8,
            r: self.r_lambda as u8,
            n: self.n as u64,
            m: self.addr.m as u64,
            master_seed: self.addr.seed,
            seed_generation: self.addr.generation,
            kind_specific: ks.into_inner(),
            payload_bits,
            payload,
        }
    }

    fn decode(c: &Container, with_used: bool) -> Result<(Self, Option<RankBitvector>)> {
        let (addr, r_lambda) = decode_header(c)?;
        if addr.k < 2 || r_lambda != selector_bits(addr.k) || addr.chunks_present() {
            return Err(Error::Malformed("perfect hash header".into()));
        }
        let mut rd = c.payload_reader();
        let table = rd.read_vec(addr.m, r_lambda)?;
        let used = if with_used {
            let bits = rd.read_vec(addr.m, 1)?;
            let used = RankBitvector::from_positions(addr.m, bits.iter().enumerate().filter(|(_, &b)| b == 1).map(|(i, _)| i))?;
            if used.count_ones() as u64 != c.n {
                return Err(Error::Malformed("used positions do not match n".into()));
            }
            Some(used)
        } else {
            None
        };
        rd.finish()?;
        let phf = Self {
            n: c.n as usize,
            addr,
            r_lambda,
            table,
        };
        Ok((phf, used))
    }
}

impl Persist for PerfectHash {
    fn to_container(&self) -> Container {
        self.container(Kind::Phf, None)
    }

    fn from_container(c: &Container) -> Result<Self> {
        c.expect_kind(Kind::Phf)?;
        Self::decode(c, false).map(|(p, _)| p)
    }
}

/// Bijection from the key set onto `[n]`: the rank of the perfect hash
/// value among all used positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinimalPerfectHash {
    base: PerfectHash,
    used: RankBitvector,
}

impl MinimalPerfectHash {
    pub fn build<K: AsRef<[u8]>>(keys: &[K], params: &PhfParams) -> Result<Self> {
        let (base, positions) = PerfectHash::build_with_positions(keys, params)?;
        let used = RankBitvector::from_positions(base.m(), positions)?;
        Ok(Self { base, used })
    }

    #[inline]
    pub fn eval(&self, key: &[u8]) -> usize {
        self.used.rank1_unchecked(self.base.eval(key))
    }

    pub fn base(&self) -> &PerfectHash {
        &self.base
    }

    pub fn used(&self) -> &RankBitvector {
        &self.used
    }

    pub fn n(&self) -> usize {
        self.base.n
    }

    /// Selector table plus the rank bitvector with its index.
    pub fn table_bits(&self) -> u64 {
        self.base.table_bits() + self.used.total_bits() as u64
    }

    pub fn space_bits(&self) -> u64 {
        self.table_bits() + self.base.header_bits()
    }

    /// Table bits per key, excluding the fixed header.
    pub fn bits_per_key(&self) -> f64 {
        self.table_bits() as f64 / self.n().max(1) as f64
    }
}

impl Persist for MinimalPerfectHash {
    fn to_container(&self) -> Container {
        self.base.container(Kind::Mphf, Some(&self.used))
    }

    fn from_container(c: &Container) -> Result<Self> {
        c.expect_kind(Kind::Mphf)?;
        let (base, used) = PerfectHash::decode(c, true)?;
        Ok(Self {
            base,
            used: used.expect("decoded with used bits"),
        })
    }
}
