//! Approximate membership and Bloomier filters on top of retrieval, plus
//! space lower bounds for approximate membership.

use num_bigint::BigUint;

use crate::blocked::{BlockedParams, BlockedRetrieval};
use crate::compact::{CompactParams, CompactRetrieval};
use crate::container::{ByteReader, ByteWriter, Container, Kind, Persist};
use crate::error::{Error, Result};
use crate::gf2::value_mask;
use crate::hashing::SeededHasher;
use crate::input::normalize_keys;
use crate::retrieval::{RetrievalParams, RetrievalStructure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BackendKind {
    Basic,
    Compact,
    Blocked,
}

impl BackendKind {
    fn tag(self) -> u8 {
        match self {
            BackendKind::Basic => 1,
            BackendKind::Compact => 2,
            BackendKind::Blocked => 3,
        }
    }

    fn container_kind(self) -> Kind {
        match self {
            BackendKind::Basic => Kind::Basic,
            BackendKind::Compact => Kind::Compact,
            BackendKind::Blocked => Kind::Blocked,
        }
    }

    fn from_tag(t: u8) -> Result<Self> {
        match t {
            1 => Ok(BackendKind::Basic),
            2 => Ok(BackendKind::Compact),
            3 => Ok(BackendKind::Blocked),
            other => Err(Error::Malformed(format!("unknown backend {other}"))),
        }
    }
}

/// A retrieval structure of any kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Backend {
    Basic(RetrievalStructure),
    Compact(CompactRetrieval),
    Blocked(BlockedRetrieval),
}

impl Backend {
    pub fn build<K: AsRef<[u8]>>(pairs: &[(K, u64)], r: u32, params: &BackendParams) -> Result<Self> {
        Ok(match params.kind {
            BackendKind::Basic => Backend::Basic(RetrievalStructure::build(pairs, r, &params.basic)?),
            BackendKind::Compact => Backend::Compact(CompactRetrieval::build(pairs, r, &params.compact)?),
            BackendKind::Blocked => Backend::Blocked(BlockedRetrieval::build(pairs, r, &params.blocked)?),
        })
    }

    pub fn kind(&self) -> BackendKind {
        match self {
            Backend::Basic(_) => BackendKind::Basic,
            Backend::Compact(_) => BackendKind::Compact,
            Backend::Blocked(_) => BackendKind::Blocked,
        }
    }

    #[inline]
    pub fn query(&self, key: &[u8]) -> u64 {
        match self {
            Backend::Basic(d) => d.query(key),
            Backend::Compact(d) => d.query(key),
            Backend::Blocked(d) => d.query(key),
        }
    }

    pub fn table_bits(&self) -> u64 {
        match self {
            Backend::Basic(d) => d.table_bits(),
            Backend::Compact(d) => d.table_bits(),
            Backend::Blocked(d) => d.table_bits(),
        }
    }

    pub fn header_bits(&self) -> u64 {
        match self {
            Backend::Basic(d) => d.header_bits(),
            Backend::Compact(d) => d.header_bits(),
            Backend::Blocked(d) => d.header_bits(),
        }
    }

    /// Whether probe sets come from split-and-share tables.
    pub fn is_split_share(&self) -> bool {
        matches!(self, Backend::Basic(d) if d.is_split_share())
    }

    fn to_container(&self) -> Container {
        match self {
            Backend::Basic(d) => d.to_container(),
            Backend::Compact(d) => d.to_container(),
            Backend::Blocked(d) => d.to_container(),
        }
    }

    fn from_container(c: &Container) -> Result<Self> {
        Ok(match c.kind {
            Kind::Basic => Backend::Basic(RetrievalStructure::from_container(c)?),
            Kind::Compact => Backend::Compact(CompactRetrieval::from_container(c)?),
            Kind::Blocked => Backend::Blocked(BlockedRetrieval::from_container(c)?),
            other => return Err(Error::Malformed(format!("{} is not a retrieval kind", other.name()))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackendParams {
    pub kind: BackendKind,
    pub basic: RetrievalParams,
    pub compact: CompactParams,
    pub blocked: BlockedParams,
}

impl BackendParams {
    pub fn basic(params: RetrievalParams) -> Self {
        Self {
            kind: BackendKind::Basic,
            basic: params,
            ..Self::default()
        }
    }
}

impl Default for BackendParams {
    fn default() -> Self {
        Self {
            kind: BackendKind::Basic,
            basic: RetrievalParams::default(),
            compact: CompactParams::default(),
            blocked: BlockedParams::default(),
        }
    }
}

pub const SPLIT_SHARE_NOTE: &str =
    "split-and-share probes: false-positive rate is 2^-s plus an additive O(1/sqrt(n)) term (not measured)";

/// Default signature seed, derived so it differs from any backend seed.
pub fn default_signature_seed(seed: u64) -> u64 {
    crate::hashing::mix64(seed ^ 0x51_6E_A7_u64.rotate_left(40))
}

#[inline]
fn signature(seed: u64, s: u32, key: &[u8]) -> u64 {
    if s == 0 {
        0
    } else {
        SeededHasher::new(seed, 0).hash(key) & value_mask(s)
    }
}

/// Header layout shared by filters: prefix bytes, then the backend's
/// kind-specific bytes; the backend's header fields and payload are reused.
fn wrap(kind: Kind, prefix: &[u8], n: usize, backend: Option<&Backend>) -> Container {
    match backend {
        Some(b) => {
            let mut c = b.to_container();
            let mut ks = prefix.to_vec();
            ks.push(b.kind().tag());
            ks.extend_from_slice(&c.kind_specific);
            c.kind_specific = ks;
            c.kind = kind;
            c
        }
        None => {
            let mut ks = prefix.to_vec();
            ks.push(0);
            Container {
                kind,
                k: 0,
                r: 0,
                n: n as u64,
                m: 0,
                master_seed: 0,
                seed_generation: 0,
                kind_specific: ks,
                payload_bits: 0,
                payload: Vec::new(),
            }
        }
    }
}

fn unwrap_backend(c: &Container, prefix_len: usize) -> Result<Option<Backend>> {
    let tag = *c
        .kind_specific
        .get(prefix_len)
        .ok_or_else(|| Error::Malformed("missing backend tag".into()))?;
    if tag == 0 {
        if c.payload_bits != 0 || c.kind_specific.len() != prefix_len + 1 {
            return Err(Error::Malformed("empty filter with payload".into()));
        }
        return Ok(None);
    }
    let kind = BackendKind::from_tag(tag)?;
    let mut inner = c.clone();
    inner.kind = kind.container_kind();
    inner.kind_specific = c.kind_specific[prefix_len + 1..].to_vec();
    Ok(Some(Backend::from_container(&inner)?))
}

/// Approximate membership with false-positive rate `2^-s`.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipFilter {
    n: usize,
    s: u32,
    signature_seed: u64,
    /// `None` when `s = 0`.
    backend: Option<Backend>,
}

impl MembershipFilter {
    pub fn build<K: AsRef<[u8]>>(keys: &[K], s: u32, signature_seed: u64, params: &BackendParams) -> Result<Self> {
        if s > 64 {
            return Err(Error::InvalidParameter(format!("signature width {s} > 64")));
        }
        let sorted = normalize_keys(keys)?;
        let backend = if s == 0 {
            None
        } else {
            let pairs: Vec<(&[u8], u64)> = sorted
                .iter()
                .map(|k| (*k, signature(signature_seed, s, k)))
                .collect();
            Some(Backend::build(&pairs, s, params)?)
        };
        Ok(Self {
            n: sorted.len(),
            s,
            signature_seed,
            backend,
        })
    }

    #[inline]
    pub fn contains(&self, key: &[u8]) -> bool {
        match &self.backend {
            None => true,
            Some(b) => b.query(key) == signature(self.signature_seed, self.s, key),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn signature_bits(&self) -> u32 {
        self.s
    }

    pub fn signature_seed(&self) -> u64 {
        self.signature_seed
    }

    pub fn backend(&self) -> Option<&Backend> {
        self.backend.as_ref()
    }

    /// Caveat on the false-positive rate when probes come from shared tables.
    pub fn split_share_note(&self) -> Option<&'static str> {
        self.backend
            .as_ref()
            .filter(|b| b.is_split_share())
            .map(|_| SPLIT_SHARE_NOTE)
    }

    /// Nominal false-positive rate `2^-s`.
    pub fn false_positive_rate(&self) -> f64 {
        (-f64::from(self.s)).exp2()
    }

    pub fn table_bits(&self) -> u64 {
        self.backend.as_ref().map_or(0, Backend::table_bits)
    }

    pub fn space_bits(&self) -> u64 {
        self.to_container().header_bits() + self.table_bits()
    }
}

impl Persist for MembershipFilter {
    fn to_container(&self) -> Container {
        let mut p = ByteWriter::new();
        p.u8(self.s as u8).u64(self.signature_seed);
        wrap(Kind::Filter, &p.into_inner(), self.n, self.backend.as_ref())
    }

    fn from_container(c: &Container) -> Result<Self> {
        c.expect_kind(Kind::Filter)?;
        let mut rd = ByteReader::new(&c.kind_specific);
        let s = u32::from(rd.u8()?);
        let signature_seed = rd.u64()?;
        let backend = unwrap_backend(c, 9)?;
        if (s == 0) != backend.is_none() || s > 64 {
            return Err(Error::Malformed("signature width does not match backend".into()));
        }
        if backend.is_some() && u32::from(c.r) != s {
            return Err(Error::Malformed("backend width differs from signature width".into()));
        }
        Ok(Self {
            n: c.n as usize,
            s,
            signature_seed,
            backend,
        })
    }
}

/// Retrieval of `r`-bit payloads with an `s`-bit signature check.
#[derive(Debug, Clone, PartialEq)]
pub struct BloomierFilter {
    n: usize,
    r: u32,
    s: u32,
    signature_seed: u64,
    backend: Backend,
}

impl BloomierFilter {
    pub fn build<K: AsRef<[u8]>>(
        pairs: &[(K, u64)],
        r: u32,
        s: u32,
        signature_seed: u64,
        params: &BackendParams,
    ) -> Result<Self> {
        if r == 0 || r + s > 64 {
            return Err(Error::InvalidParameter(format!("need 1 <= r and r + s <= 64 (r = {r}, s = {s})")));
        }
        let mask = value_mask(r);
        if let Some((_, v)) = pairs.iter().find(|(_, v)| v & !mask != 0) {
            return Err(Error::ValueTooWide { value: *v, bits: r });
        }
        let combined: Vec<(&[u8], u64)> = pairs
            .iter()
            .map(|(k, v)| {
                let k = k.as_ref();
                (k, (v << s) | signature(signature_seed, s, k))
            })
            .collect();
        let backend = Backend::build(&combined, r + s, params)?;
        Ok(Self {
            n: pairs.len(),
            r,
            s,
            signature_seed,
            backend,
        })
    }

    /// `(true, f(x))` for members; `(false, 0)` when the signature check fails.
    #[inline]
    pub fn get(&self, key: &[u8]) -> (bool, u64) {
        let v = self.backend.query(key);
        let sig = if self.s == 0 { 0 } else { v & value_mask(self.s) };
        if sig == signature(self.signature_seed, self.s, key) {
            (true, if self.s == 64 { 0 } else { v >> self.s })
        } else {
            (false, 0)
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn payload_bits(&self) -> u32 {
        self.r
    }

    pub fn signature_bits(&self) -> u32 {
        self.s
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn table_bits(&self) -> u64 {
        self.backend.table_bits()
    }

    pub fn space_bits(&self) -> u64 {
        self.to_container().header_bits() + self.table_bits()
    }
}

impl Persist for BloomierFilter {
    fn to_container(&self) -> Container {
        let mut p = ByteWriter::new();
        p.u8(self.r as u8).u8(self.s as u8).u64(self.signature_seed);
        wrap(Kind::Bloomier, &p.into_inner(), self.n, Some(&self.backend))
    }

    fn from_container(c: &Container) -> Result<Self> {
        c.expect_kind(Kind::Bloomier)?;
        let mut rd = ByteReader::new(&c.kind_specific);
        let r = u32::from(rd.u8()?);
        let s = u32::from(rd.u8()?);
        let signature_seed = rd.u64()?;
        let backend = unwrap_backend(c, 10)?.ok_or_else(|| Error::Malformed("Bloomier filter without backend".into()))?;
        if r == 0 || r + s > 64 || u32::from(c.r) != r + s {
            return Err(Error::Malformed("payload and signature widths".into()));
        }
        Ok(Self {
            n: c.n as usize,
            r,
            s,
            signature_seed,
            backend,
        })
    }
}

/// Size of the key universe for the lower bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Universe {
    Infinite,
    Finite(f64),
}

/// `n log2(1/eps) - (1 - eps) n^2 / (eps u + (1 - eps) n) * log2 e`, the
/// space any approximate-membership structure with false-positive rate
/// `eps` needs on sets of size `n` from a universe of size `u`.
pub fn membership_lower_bound(n: u64, epsilon: f64, universe: Universe) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::DomainError(format!("epsilon = {epsilon} outside (0, 1)")));
    }
    if n == 0 {
        return Err(Error::DomainError("n must be at least 1".into()));
    }
    let nf = n as f64;
    let main = nf * (1.0 / epsilon).log2();
    match universe {
        Universe::Infinite => Ok(main),
        Universe::Finite(u) => {
            if !(u > nf) {
                return Err(Error::DomainError(format!("universe {u} must exceed n = {n}")));
            }
            let sub = (1.0 - epsilon) * nf * nf / (epsilon * u + (1.0 - epsilon) * nf) * std::f64::consts::LOG2_E;
            Ok(main - sub)
        }
    }
}

fn binomial(n: u64, k: u64) -> BigUint {
    let k = k.min(n - k);
    let mut acc = BigUint::from(1u32);
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

fn log2_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 64 {
        let v: u64 = x.try_into().expect("fits in u64");
        return (v as f64).log2();
    }
    let shift = bits - 64;
    let top: u64 = (x >> shift).try_into().expect("64 bits");
    (top as f64).log2() + shift as f64
}

/// `ceil(log2(C(u, n) / C(floor(eps (u - n)) + n, n)))`, the counting form
/// of the bound, with exact binomial coefficients.
pub fn membership_counting_bound(n: u64, epsilon: f64, u: u64) -> Result<u64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::DomainError(format!("epsilon = {epsilon} outside (0, 1)")));
    }
    if n == 0 || u <= n {
        return Err(Error::DomainError(format!("need 1 <= n < u (n = {n}, u = {u})")));
    }
    let accepted = (epsilon * (u - n) as f64).floor() as u64 + n;
    let num = binomial(u, n);
    let den = binomial(accepted, n);
    let v = log2_big(&num) - log2_big(&den);
    Ok(v.max(0.0).ceil() as u64)
}

/// Space of a Bloom filter, of a retrieval-based filter with `m = n` and
/// `ceil(log2(1/eps))`-bit signatures, and the infinite-universe bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceComparison {
    pub bloom_bits: f64,
    pub retrieval_bits: f64,
    pub lower_bound_bits: f64,
}

pub fn bloom_comparison(n: u64, epsilon: f64) -> Result<SpaceComparison> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::DomainError(format!("epsilon = {epsilon} outside (0, 1]")));
    }
    let nf = n as f64;
    let info = (1.0 / epsilon).log2();
    Ok(SpaceComparison {
        bloom_bits: nf * info * std::f64::consts::LOG2_E,
        retrieval_bits: nf * info.ceil(),
        lower_bound_bits: nf * info,
    })
}
