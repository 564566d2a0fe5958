//! Command definitions and dispatch.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use sdr_core::filter::{
    bloom_comparison, default_signature_seed, membership_counting_bound, membership_lower_bound, BackendKind,
    BackendParams, Universe,
};
use sdr_core::threshold::{beta_approx, beta_k, rank_mc_gf2, rank_mc_weighted, RankExperiment};
use sdr_core::{
    BlockedParams, BlockedRetrieval, BloomierFilter, CompactParams, CompactRetrieval, MembershipFilter,
    MinimalPerfectHash, PerfectHash, PhfParams, RetrievalParams, RetrievalStructure,
};
use thiserror::Error;

use crate::ingest::{ingest, Format, Values};
use crate::structure::AnyStructure;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_EXHAUSTED: i32 = 3;

/// A flag combination clap cannot express.
#[derive(Debug, Error)]
#[error("{0}")]
pub struct UsageError(pub String);

#[derive(Debug, Parser)]
#[command(name = "sdr", version, about = "Retrieval structures, filters and perfect hashing over GF(2)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a structure from an input file and write its container.
    Build(BuildArgs),
    /// Look up keys in a structure.
    Query(QueryArgs),
    /// Check a structure against its construction records.
    Verify(VerifyArgs),
    /// Print size and parameter report.
    Stats(StructureArg),
    /// Measure query throughput on random keys.
    Bench(BenchArgs),
    /// Print full-rank thresholds as CSV.
    Thresholds(ThresholdArgs),
    /// Monte Carlo full-rank experiment, as CSV.
    McRank(McRankArgs),
    /// Space lower bound for approximate membership.
    LowerBound(LowerBoundArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StructureKind {
    Basic,
    Compact,
    Blocked,
    Filter,
    Bloomier,
    Phf,
    Mphf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Basic,
    Compact,
    Blocked,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long, value_enum)]
    pub kind: StructureKind,
    #[arg(long)]
    pub input: PathBuf,
    /// Input format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Value width r.
    #[arg(long = "bits", default_value_t = 8)]
    pub bits: u32,
    /// Probes per key (default 4 for phf/mphf, 3 otherwise).
    #[arg(long)]
    pub k: Option<usize>,
    /// Table slack (default 0.035 for phf/mphf, 0.3 for blocked, 0.25 otherwise).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Block capacity slack of the blocked construction.
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long = "block-size", default_value_t = 64)]
    pub block_size: usize,
    /// Signature width s for filters.
    #[arg(long = "sig-bits", default_value_t = 8)]
    pub sig_bits: u32,
    /// Retrieval backend of filters.
    #[arg(long, value_enum, default_value_t = BackendArg::Basic)]
    pub backend: BackendArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Draw probe sets from split-and-share tables (basic retrieval only).
    #[arg(long = "split-share")]
    pub split_share: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StructureArg {
    #[arg(long)]
    pub structure: PathBuf,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub structure: PathBuf,
    #[arg(long, conflicts_with = "keys_file")]
    pub key: Option<String>,
    /// One key per line.
    #[arg(long = "keys-file")]
    pub keys_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub structure: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub structure: PathBuf,
    #[arg(long, default_value_t = 1_000_000)]
    pub queries: usize,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[arg(long = "k-min", default_value_t = 3)]
    pub k_min: usize,
    #[arg(long = "k-max", default_value_t = 6)]
    pub k_max: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct McRankArgs {
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Row counts, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    /// Densities n/m, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "m", required_unless_present = "m")]
    pub ratio: Vec<f64>,
    /// Column counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub m: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// `gf2` or a prime modulus below 2^31.
    #[arg(long, default_value = "gf2")]
    pub field: String,
    /// Embed a random injective placement before sampling the other entries.
    #[arg(long)]
    pub plant: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct LowerBoundArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub epsilon: f64,
    /// Universe size, or `inf`.
    #[arg(long, default_value = "inf")]
    pub universe: String,
    /// Also evaluate the counting bound with exact binomials.
    #[arg(long)]
    pub exact: bool,
}

/// Maps an error to the process exit code.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<UsageError>().is_some() {
        return EXIT_USAGE;
    }
    match err.downcast_ref::<sdr_core::Error>() {
        Some(sdr_core::Error::RandomnessExhausted { .. }) => EXIT_EXHAUSTED,
        _ => EXIT_DATA,
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match dispatch(cli.command, &mut out) {
        Ok(code) => code,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

pub fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Build(a) => build(&a, out),
        Command::Query(a) => query(&a, out),
        Command::Verify(a) => verify(&a, out),
        Command::Stats(a) => stats(&a.structure, out),
        Command::Bench(a) => bench(&a, out),
        Command::Thresholds(a) => thresholds(&a, out),
        Command::McRank(a) => mc_rank(&a, out),
        Command::LowerBound(a) => lower_bound(&a, out),
    }
}

fn read_records(path: &Path, format: Option<Format>, values: Values) -> Result<Vec<(Vec<u8>, u64)>> {
    let format = format.unwrap_or_else(|| Format::from_path(path));
    ingest(path, format, values).with_context(|| format!("reading {}", path.display()))
}

fn backend_params(a: &BuildArgs, k: usize, delta: Option<f64>) -> BackendParams {
    let basic = RetrievalParams {
        split_share: a.split_share,
        ..RetrievalParams::new(k, delta.unwrap_or(0.25), a.seed)
    };
    let mut compact = CompactParams::with_seed(a.seed);
    compact.fallback = basic;
    BackendParams {
        kind: match a.backend {
            BackendArg::Basic => BackendKind::Basic,
            BackendArg::Compact => BackendKind::Compact,
            BackendArg::Blocked => BackendKind::Blocked,
        },
        basic,
        compact,
        blocked: BlockedParams {
            k,
            eps: a.eps,
            delta: delta.unwrap_or(0.3),
            b: a.block_size,
            seed: a.seed,
            ..BlockedParams::default()
        },
    }
}

pub fn build_structure(a: &BuildArgs, records: &[(Vec<u8>, u64)]) -> Result<AnyStructure> {
    if a.split_share && !matches!(a.kind, StructureKind::Basic | StructureKind::Filter | StructureKind::Bloomier) {
        bail!(UsageError("--split-share applies to basic retrieval and its filters".into()));
    }
    let is_phf = matches!(a.kind, StructureKind::Phf | StructureKind::Mphf);
    let k = a.k.unwrap_or(if is_phf { 4 } else { 3 });
    let params = backend_params(a, k, a.delta);
    let keys = || records.iter().map(|(k, _)| k.as_slice()).collect::<Vec<_>>();
    Ok(match a.kind {
        StructureKind::Basic => AnyStructure::Basic(RetrievalStructure::build(records, a.bits, &params.basic)?),
        StructureKind::Compact => AnyStructure::Compact(CompactRetrieval::build(records, a.bits, &params.compact)?),
        StructureKind::Blocked => AnyStructure::Blocked(BlockedRetrieval::build(records, a.bits, &params.blocked)?),
        StructureKind::Filter => AnyStructure::Filter(MembershipFilter::build(
            &keys(),
            a.sig_bits,
            default_signature_seed(a.seed),
            &params,
        )?),
        StructureKind::Bloomier => AnyStructure::Bloomier(BloomierFilter::build(
            records,
            a.bits,
            a.sig_bits,
            default_signature_seed(a.seed),
            &params,
        )?),
        StructureKind::Phf | StructureKind::Mphf => {
            let p = PhfParams::new(k, a.delta.unwrap_or(0.035), a.seed);
            if a.kind == StructureKind::Phf {
                AnyStructure::Phf(PerfectHash::build(&keys(), &p)?)
            } else {
                AnyStructure::Mphf(MinimalPerfectHash::build(&keys(), &p)?)
            }
        }
    })
}

fn build(a: &BuildArgs, out: &mut dyn Write) -> Result<i32> {
    let values = match a.kind {
        StructureKind::Basic | StructureKind::Compact | StructureKind::Blocked | StructureKind::Bloomier => {
            Values::Bits(a.bits)
        }
        StructureKind::Filter | StructureKind::Phf | StructureKind::Mphf => Values::Ignored,
    };
    if let Values::Bits(r) = values {
        if !(1..=64).contains(&r) {
            bail!(UsageError(format!("--bits {r} outside 1..=64")));
        }
    }
    let records = read_records(&a.input, a.format, values)?;
    let start = Instant::now();
    let s = build_structure(a, &records)?;
    log::info!("built {} keys in {:.3} s", records.len(), start.elapsed().as_secs_f64());
    let bytes = s.to_bytes();
    std::fs::write(&a.out, &bytes).with_context(|| format!("writing {}", a.out.display()))?;
    writeln!(out, "wrote {} ({} bytes, {} keys)", a.out.display(), bytes.len(), records.len())?;
    Ok(EXIT_OK)
}

fn query(a: &QueryArgs, out: &mut dyn Write) -> Result<i32> {
    let s = AnyStructure::load(&a.structure)?;
    match (&a.key, &a.keys_file) {
        (Some(k), None) => writeln!(out, "{}", s.query(k.as_bytes()))?,
        (None, Some(path)) => {
            let file = std::fs::File::open(path).with_context(|| format!("reading {}", path.display()))?;
            for line in std::io::BufReader::new(file).split(b'\n') {
                let line = line?;
                let key = line.strip_suffix(b"\r").unwrap_or(&line);
                writeln!(out, "{}\t{}", String::from_utf8_lossy(key), s.query(key))?;
            }
        }
        _ => bail!(UsageError("give one of --key or --keys-file".into())),
    }
    Ok(EXIT_OK)
}

fn verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let s = AnyStructure::load(&a.structure)?;
    let records = read_records(&a.input, a.format, s.values())?;
    let report = s.verify(&records);
    if report.passed() {
        writeln!(out, "ok: {} keys verified", report.checked)?;
        Ok(EXIT_OK)
    } else {
        writeln!(out, "FAILED: {} of {} keys", report.failures, report.checked)?;
        Ok(EXIT_DATA)
    }
}

fn stats(path: &Path, out: &mut dyn Write) -> Result<i32> {
    let s = AnyStructure::load(path)?;
    for (k, v) in s.stats() {
        writeln!(out, "{k}: {v}")?;
    }
    Ok(EXIT_OK)
}

fn bench(a: &BenchArgs, out: &mut dyn Write) -> Result<i32> {
    if a.threads == 0 {
        bail!(UsageError("--threads must be at least 1".into()));
    }
    let s = AnyStructure::load(&a.structure)?;
    let mut rng = rand::rngs::StdRng::seed_from_u64(a.seed);
    let keys: Vec<[u8; 16]> = (0..a.queries).map(|_| rng.gen()).collect();
    let start = Instant::now();
    let chunk = keys.len().div_ceil(a.threads).max(1);
    let sink: u64 = std::thread::scope(|scope| {
        let handles: Vec<_> = keys
            .chunks(chunk)
            .map(|part| scope.spawn(|| part.iter().fold(0u64, |acc, k| acc ^ s.touch(k))))
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker")).fold(0, |a, b| a ^ b)
    });
    let secs = start.elapsed().as_secs_f64();
    std::hint::black_box(sink);
    writeln!(out, "queries: {}", a.queries)?;
    writeln!(out, "threads: {}", a.threads)?;
    writeln!(out, "seconds: {secs:.6}")?;
    writeln!(out, "queries_per_sec: {:.0}", a.queries as f64 / secs.max(1e-12))?;
    Ok(EXIT_OK)
}

fn thresholds(a: &ThresholdArgs, out: &mut dyn Write) -> Result<i32> {
    if a.k_min < 3 || a.k_max < a.k_min {
        bail!(UsageError("need 3 <= k-min <= k-max".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "beta", "beta_approx", "beta_inverse"])?;
    for k in a.k_min..=a.k_max {
        let t = beta_k(k, a.tol)?;
        w.write_record([
            k.to_string(),
            format!("{:.8}", t.beta),
            format!("{:.8}", beta_approx(k)),
            format!("{:.8}", t.beta_inverse),
        ])?;
    }
    w.flush()?;
    Ok(EXIT_OK)
}

/// `gf2` or `2` for GF(2), otherwise a prime modulus.
pub fn parse_field(s: &str) -> Result<Option<u64>> {
    if s.eq_ignore_ascii_case("gf2") || s == "2" {
        return Ok(None);
    }
    let p: u64 = s.parse().map_err(|_| UsageError(format!("bad field {s:?}")))?;
    if !(3..1 << 31).contains(&p) || !(2..).take_while(|d| d * d <= p).all(|d| p % d != 0) {
        bail!(UsageError(format!("field modulus {p} is not a prime in [3, 2^31)")));
    }
    Ok(Some(p))
}

fn mc_rank(a: &McRankArgs, out: &mut dyn Write) -> Result<i32> {
    let field = parse_field(&a.field)?;
    if a.plant && field.is_none() {
        bail!(UsageError("--plant needs a prime field".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "n", "m", "trials", "full_rank_count", "fraction"])?;
    for &n in &a.n {
        let ms: Vec<usize> = if a.m.is_empty() {
            a.ratio.iter().map(|&r| ((n as f64 / r).round() as usize).max(a.k)).collect()
        } else {
            a.m.clone()
        };
        for m in ms {
            let e: RankExperiment = match field {
                None => rank_mc_gf2(n, m, a.k, a.trials, a.seed)?,
                Some(p) => rank_mc_weighted(n, m, a.k, p, a.trials, a.seed, a.plant)?,
            };
            w.write_record([
                e.k.to_string(),
                e.n.to_string(),
                e.m.to_string(),
                e.trials.to_string(),
                e.full_rank_count.to_string(),
                format!("{:.6}", e.fraction()),
            ])?;
        }
    }
    w.flush()?;
    Ok(EXIT_OK)
}

fn lower_bound(a: &LowerBoundArgs, out: &mut dyn Write) -> Result<i32> {
    let universe = if a.universe.eq_ignore_ascii_case("inf") {
        Universe::Infinite
    } else {
        let u: f64 = a.universe.parse().map_err(|_| UsageError(format!("bad universe {:?}", a.universe)))?;
        Universe::Finite(u)
    };
    let bound = membership_lower_bound(a.n, a.epsilon, universe)?;
    let cmp = bloom_comparison(a.n, a.epsilon)?;
    writeln!(out, "lower_bound_bits: {bound}")?;
    writeln!(out, "bloom_bits: {}", cmp.bloom_bits)?;
    writeln!(out, "retrieval_filter_bits: {}", cmp.retrieval_bits)?;
    if a.exact {
        let Universe::Finite(u) = universe else {
            bail!(UsageError("--exact needs a finite --universe".into()));
        };
        if u.fract() != 0.0 || u > u64::MAX as f64 {
            bail!(UsageError("--exact needs an integral universe".into()));
        }
        writeln!(out, "counting_bound_bits: {}", membership_counting_bound(a.n, a.epsilon, u as u64)?)?;
    }
    Ok(EXIT_OK)
}
