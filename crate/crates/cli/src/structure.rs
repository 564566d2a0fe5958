//! Loading, querying and describing a serialized structure of any kind.

use std::path::Path;

use anyhow::{Context, Result};
use sdr_core::container::Container;
use sdr_core::filter::Backend;
use sdr_core::{
    BlockedRetrieval, BloomierFilter, CompactRetrieval, Kind, MembershipFilter, MinimalPerfectHash, PerfectHash,
    Persist, RetrievalStructure,
};

use crate::ingest::Values;

/// Asymptotic bits per key of the minimal perfect hash with a succinct
/// rank dictionary, for comparison in `stats`.
pub const MPHF_REFERENCE_BITS_PER_KEY: f64 = 2.29;

#[derive(Debug, Clone, PartialEq)]
pub enum AnyStructure {
    Basic(RetrievalStructure),
    Compact(CompactRetrieval),
    Blocked(BlockedRetrieval),
    Filter(MembershipFilter),
    Bloomier(BloomierFilter),
    Phf(PerfectHash),
    Mphf(MinimalPerfectHash),
}

/// Outcome of checking a structure against its construction records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyReport {
    pub checked: usize,
    pub failures: usize,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

impl AnyStructure {
    pub fn from_bytes(bytes: &[u8]) -> sdr_core::Result<Self> {
        let c = Container::from_bytes(bytes)?;
        Ok(match c.kind {
            Kind::Basic => Self::Basic(RetrievalStructure::from_container(&c)?),
            Kind::Compact => Self::Compact(CompactRetrieval::from_container(&c)?),
            Kind::Blocked => Self::Blocked(BlockedRetrieval::from_container(&c)?),
            Kind::Filter => Self::Filter(MembershipFilter::from_container(&c)?),
            Kind::Bloomier => Self::Bloomier(BloomierFilter::from_container(&c)?),
            Kind::Phf => Self::Phf(PerfectHash::from_container(&c)?),
            Kind::Mphf => Self::Mphf(MinimalPerfectHash::from_container(&c)?),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_bytes(&bytes).with_context(|| format!("loading {}", path.display()))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.container().to_bytes()
    }

    pub fn container(&self) -> Container {
        match self {
            Self::Basic(s) => s.to_container(),
            Self::Compact(s) => s.to_container(),
            Self::Blocked(s) => s.to_container(),
            Self::Filter(s) => s.to_container(),
            Self::Bloomier(s) => s.to_container(),
            Self::Phf(s) => s.to_container(),
            Self::Mphf(s) => s.to_container(),
        }
    }

    pub fn kind(&self) -> Kind {
        match self {
            Self::Basic(_) => Kind::Basic,
            Self::Compact(_) => Kind::Compact,
            Self::Blocked(_) => Kind::Blocked,
            Self::Filter(_) => Kind::Filter,
            Self::Bloomier(_) => Kind::Bloomier,
            Self::Phf(_) => Kind::Phf,
            Self::Mphf(_) => Kind::Mphf,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Basic(s) => s.n(),
            Self::Compact(s) => s.n(),
            Self::Blocked(s) => s.n(),
            Self::Filter(s) => s.n(),
            Self::Bloomier(s) => s.n(),
            Self::Phf(s) => s.n(),
            Self::Mphf(s) => s.n(),
        }
    }

    /// How the value column of construction records is read.
    pub fn values(&self) -> Values {
        match self {
            Self::Basic(s) => Values::Bits(s.r()),
            Self::Compact(s) => Values::Bits(s.r()),
            Self::Blocked(s) => Values::Bits(s.r()),
            Self::Bloomier(s) => Values::Bits(s.payload_bits()),
            Self::Filter(_) | Self::Phf(_) | Self::Mphf(_) => Values::Ignored,
        }
    }

    /// Query answer as printed by the CLI.
    pub fn query(&self, key: &[u8]) -> String {
        match self {
            Self::Basic(s) => s.query(key).to_string(),
            Self::Compact(s) => s.query(key).to_string(),
            Self::Blocked(s) => s.query(key).to_string(),
            Self::Filter(s) => s.contains(key).to_string(),
            Self::Bloomier(s) => match s.get(key) {
                (true, v) => v.to_string(),
                (false, _) => "absent".to_string(),
            },
            Self::Phf(s) => s.eval(key).to_string(),
            Self::Mphf(s) => s.eval(key).to_string(),
        }
    }

    /// Runs one query and discards the answer, for benchmarking.
    #[inline]
    pub fn touch(&self, key: &[u8]) -> u64 {
        match self {
            Self::Basic(s) => s.query(key),
            Self::Compact(s) => s.query(key),
            Self::Blocked(s) => s.query(key),
            Self::Filter(s) => u64::from(s.contains(key)),
            Self::Bloomier(s) => s.get(key).1,
            Self::Phf(s) => s.eval(key) as u64,
            Self::Mphf(s) => s.eval(key) as u64,
        }
    }

    pub fn verify(&self, records: &[(Vec<u8>, u64)]) -> VerifyReport {
        let failures = match self {
            Self::Basic(s) => records.iter().filter(|(k, v)| s.query(k) != *v).count(),
            Self::Compact(s) => records.iter().filter(|(k, v)| s.query(k) != *v).count(),
            Self::Blocked(s) => records.iter().filter(|(k, v)| s.query(k) != *v).count(),
            Self::Filter(s) => records.iter().filter(|(k, _)| !s.contains(k)).count(),
            Self::Bloomier(s) => records.iter().filter(|(k, v)| s.get(k) != (true, *v)).count(),
            Self::Phf(s) => collisions(records.iter().map(|(k, _)| s.eval(k)), s.m()),
            Self::Mphf(s) => {
                collisions(records.iter().map(|(k, _)| s.eval(k)), s.n()) + records.len().abs_diff(s.n())
            }
        };
        VerifyReport {
            checked: records.len(),
            failures,
        }
    }

    /// `name: value` lines describing size and parameters.
    pub fn stats(&self) -> Vec<(String, String)> {
        let c = self.container();
        let mut out: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| out.push((k.to_string(), v));
        put("kind", c.kind.name().to_string());
        put("n", c.n.to_string());
        put("m", c.m.to_string());
        put("k", c.k.to_string());
        put("r", c.r.to_string());
        put("seed", c.master_seed.to_string());
        put("seed_generation", c.seed_generation.to_string());
        let table_bits = match self {
            Self::Basic(s) => s.table_bits(),
            Self::Compact(s) => s.table_bits(),
            Self::Blocked(s) => s.table_bits(),
            Self::Filter(s) => s.table_bits(),
            Self::Bloomier(s) => s.table_bits(),
            Self::Phf(s) => s.table_bits(),
            Self::Mphf(s) => s.table_bits(),
        };
        let header_bits = c.header_bits();
        let n = c.n.max(1) as f64;
        put("table_bits", table_bits.to_string());
        put("header_bits", header_bits.to_string());
        put("bits_per_key", format!("{:.4}", table_bits as f64 / n));
        put("total_bits_per_key", format!("{:.4}", (table_bits + header_bits) as f64 / n));
        match self {
            Self::Basic(s) => {
                put("split_share", s.is_split_share().to_string());
            }
            Self::Compact(s) => {
                put("fallback", s.is_fallback().to_string());
                put("seed_index", s.seed_index().to_string());
                put("trial_cap", s.trial_cap().to_string());
                if let Some((lo, hi)) = s.weight_bounds() {
                    put("row_weight_range", format!("{lo}..={hi}"));
                }
            }
            Self::Blocked(s) => {
                put("block_size", s.b().to_string());
                put("block_capacity", s.block_capacity().to_string());
                put("segment_len", s.segment_len().to_string());
                put("blocks", s.blocks().to_string());
                put("overflow_keys", s.overflow_count().to_string());
                put("overflow_fraction", format!("{:.6}", s.overflow_fraction()));
                put("primary_bits", (s.primary_table().len() as u64 * u64::from(s.r())).to_string());
                put("secondary_bits", (s.secondary_table().len() as u64 * u64::from(s.r())).to_string());
            }
            Self::Filter(s) => {
                put("signature_bits", s.signature_bits().to_string());
                put("false_positive_rate", format!("{:e}", s.false_positive_rate()));
                put("backend", backend_name(s.backend()).to_string());
                if let Some(note) = s.split_share_note() {
                    put("note", note.to_string());
                }
            }
            Self::Bloomier(s) => {
                put("payload_bits", s.payload_bits().to_string());
                put("signature_bits", s.signature_bits().to_string());
                put("backend", backend_name(Some(s.backend())).to_string());
            }
            Self::Phf(s) => {
                put("selector_bits", s.selector_bits().to_string());
            }
            Self::Mphf(s) => {
                put("selector_bits", s.base().selector_bits().to_string());
                put("selector_table_bits", s.base().table_bits().to_string());
                put("rank_bits", s.used().total_bits().to_string());
                put("rank_index_bits", s.used().index_bits().to_string());
                put("mphf_bits_per_key", format!("{:.4}", s.bits_per_key()));
                put("reference_bits_per_key", format!("{MPHF_REFERENCE_BITS_PER_KEY}"));
            }
        }
        out
    }
}

fn backend_name(b: Option<&Backend>) -> &'static str {
    match b {
        None => "none",
        Some(Backend::Basic(_)) => "basic",
        Some(Backend::Compact(_)) => "compact",
        Some(Backend::Blocked(_)) => "blocked",
    }
}

/// Number of values that are out of range or repeat an earlier one.
fn collisions(values: impl Iterator<Item = usize>, range: usize) -> usize {
    let mut seen = vec![false; range];
    let mut bad = 0;
    for v in values {
        if v >= range || std::mem::replace(&mut seen[v], true) {
            bad += 1;
        }
    }
    bad
}
