//! Full-rank thresholds of random sparse matrices: numerical evaluation of
//! Calkin's characterization and Monte-Carlo rank experiments.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gf2::{sparse_rank, SparseRows};
use crate::hashing::{distinct_k_set_into, generation_seed, SeededFamily};

const GRID_POINTS: usize = 1024;
const GOLDEN_STEPS: usize = 64;
const ALPHA_EDGE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdMethod {
    Exact,
    Approx,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdResult {
    pub k: usize,
    pub beta: f64,
    pub beta_inverse: f64,
    pub method: ThresholdMethod,
}

impl ThresholdResult {
    fn new(k: usize, beta: f64, method: ThresholdMethod) -> Self {
        Self {
            k,
            beta,
            beta_inverse: 1.0 / beta,
            method,
        }
    }
}

/// `f(a, b) = -ln 2 - a ln a - (1 - a) ln(1 - a) + b ln(1 + (1 - 2a)^k)`.
pub fn calkin_f(alpha: f64, beta: f64, k: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::DomainError(format!("alpha = {alpha} outside (0, 1)")));
    }
    if !(beta > 0.0) {
        return Err(Error::DomainError(format!("beta = {beta} must be positive")));
    }
    let x = (1.0 - 2.0 * alpha).powi(k as i32);
    Ok(-std::f64::consts::LN_2 - alpha * alpha.ln() - (1.0 - alpha) * (-alpha).ln_1p() + beta * x.ln_1p())
}

/// Maximum of `f(., beta)` over `(0, 1/2)`: dense grid, then golden-section
/// refinement around every local maximum of the grid.
///
/// Near `1/2` the function creeps up to 0 from below, so the global grid
/// maximum can sit there while a slightly positive interior peak is
/// missed by the grid; refining each peak avoids that.
fn sup_over_alpha(beta: f64, k: usize) -> f64 {
    let f = |a: f64| calkin_f(a, beta, k).expect("alpha inside (0, 1)");
    let lo = ALPHA_EDGE;
    let hi = 0.5 - ALPHA_EDGE;
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let at = |i: usize| lo + step * i as f64;
    let vals: Vec<f64> = (0..GRID_POINTS).map(|i| f(at(i))).collect();
    let mut best = f64::NEG_INFINITY;
    for i in 0..GRID_POINTS {
        let left = i == 0 || vals[i] >= vals[i - 1];
        let right = i + 1 == GRID_POINTS || vals[i] >= vals[i + 1];
        if left && right {
            let a = at(i.saturating_sub(1));
            let b = at((i + 1).min(GRID_POINTS - 1));
            best = best.max(vals[i]).max(golden_max(&f, a, b));
        }
    }
    best
}

fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_STEPS {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd)
}

/// Smallest `beta` for which `f(., beta)` reaches 0 inside `(0, 1/2)`,
/// located by bisection to within `tol`.
pub fn beta_k(k: usize, tol: f64) -> Result<ThresholdResult> {
    if k < 3 {
        return Err(Error::InvalidParameter(format!("beta_k needs k >= 3, got {k}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {tol} must be positive")));
    }
    let (mut lo, mut hi) = (0.5, 1.0);
    if sup_over_alpha(lo, k) >= 0.0 || sup_over_alpha(hi, k) < 0.0 {
        return Err(Error::ConvergenceFailure(format!("no sign change for k = {k}")));
    }
    let mut steps = 0;
    while hi - lo > tol {
        steps += 1;
        if steps > 200 {
            return Err(Error::ConvergenceFailure(format!("k = {k}, tol = {tol}")));
        }
        let mid = 0.5 * (lo + hi);
        if sup_over_alpha(mid, k) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ThresholdResult::new(k, hi, ThresholdMethod::Exact))
}

/// Two-term expansion `1 - e^-k / ln 2 - (k^2 - 2k + 2k / ln 2 - 1) e^-2k / (2 ln 2)`.
pub fn beta_approx(k: usize) -> f64 {
    let kf = k as f64;
    let ln2 = std::f64::consts::LN_2;
    1.0 - (-kf).exp() / ln2 - (kf * kf - 2.0 * kf + 2.0 * kf / ln2 - 1.0) * (-2.0 * kf).exp() / (2.0 * ln2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Gf2,
    Prime(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankExperiment {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub trials: usize,
    pub full_rank_count: usize,
    pub field: Field,
}

impl RankExperiment {
    pub fn fraction(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.full_rank_count as f64 / self.trials as f64
        }
    }
}

/// Rows of trial `trial`: row `i` is the distinct `k`-set of key `i`.
///
/// Rows depend only on `(seed, trial, i)`, so experiments with more rows
/// extend the matrices of experiments with fewer.
pub fn random_rows(n: usize, m: usize, k: usize, seed: u64, trial: u32) -> Result<SparseRows> {
    let fam = SeededFamily::new(generation_seed(seed, trial), 1);
    let mut rows = SparseRows::with_capacity(m, n, n * k);
    let mut buf = Vec::with_capacity(k);
    for i in 0..n as u64 {
        distinct_k_set_into(&i.to_le_bytes(), k, m, &fam, &mut buf)?;
        rows.push_row(&buf);
    }
    Ok(rows)
}

/// Counts full-row-rank matrices among `trials` random `n x m` GF(2)
/// matrices with `k` ones per row.
pub fn rank_mc_gf2(n: usize, m: usize, k: usize, trials: usize, seed: u64) -> Result<RankExperiment> {
    if k > m {
        return Err(Error::KTooLarge { k, m });
    }
    let mut full = 0;
    for t in 0..trials {
        let rows = random_rows(n, m, k, seed, t as u32)?;
        if sparse_rank(&rows) == n {
            full += 1;
        }
    }
    Ok(RankExperiment {
        n,
        m,
        k,
        trials,
        full_rank_count: full,
        field: Field::Gf2,
    })
}

fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    a * b % p
}

/// Rank over `Z_p` of the `n x m` matrix whose row `i` has entry `w` at
/// column `j` for each `(j, w)` in `rows[i]`. Uses fraction-free row
/// combinations `row_t <- piv * row_t - row_t[c] * row_piv`, so no field
/// inverses are needed.
pub fn weighted_rank(rows: &[Vec<(usize, u64)>], m: usize, p: u64) -> Result<usize> {
    if !(2..1 << 31).contains(&p) {
        return Err(Error::InvalidParameter(format!("modulus {p} must lie in [2, 2^31)")));
    }
    let n = rows.len();
    let mut a = vec![0u64; n * m];
    for (i, row) in rows.iter().enumerate() {
        for &(j, w) in row {
            if j >= m {
                return Err(Error::IndexOutOfRange { index: j, len: m });
            }
            a[i * m + j] = (a[i * m + j] + w % p) % p;
        }
    }
    let mut rank = 0;
    for col in 0..m {
        if rank == n {
            break;
        }
        let Some(piv) = (rank..n).find(|&i| a[i * m + col] != 0) else {
            continue;
        };
        if piv != rank {
            for j in 0..m {
                a.swap(piv * m + j, rank * m + j);
            }
        }
        let pv = a[rank * m + col];
        for i in rank + 1..n {
            let c = a[i * m + col];
            if c == 0 {
                continue;
            }
            for j in col..m {
                let lhs = mul_mod(pv, a[i * m + j], p);
                let rhs = mul_mod(c, a[rank * m + j], p);
                a[i * m + j] = (lhs + p - rhs) % p;
            }
        }
        rank += 1;
    }
    Ok(rank)
}

/// Counts full-row-rank matrices over `Z_p` where row `i` has random field
/// weights at the `k` positions of a random `k`-set. With `plant`, an
/// injective `sigma` with `sigma(i)` in row `i`'s set is embedded first.
pub fn rank_mc_weighted(
    n: usize,
    m: usize,
    k: usize,
    p: u64,
    trials: usize,
    seed: u64,
    plant: bool,
) -> Result<RankExperiment> {
    if k > m {
        return Err(Error::KTooLarge { k, m });
    }
    if plant && n > m {
        return Err(Error::InvalidParameter(format!("cannot plant {n} distinct columns in {m}")));
    }
    let mut full = 0;
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(generation_seed(seed, t as u32));
        let sigma = if plant {
            sample(&mut rng, m, n).into_vec()
        } else {
            Vec::new()
        };
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let cols: Vec<usize> = if plant {
                let mut cols = vec![sigma[i]];
                while cols.len() < k {
                    let c = rng.gen_range(0..m);
                    if !cols.contains(&c) {
                        cols.push(c);
                    }
                }
                cols
            } else {
                sample(&mut rng, m, k).into_vec()
            };
            rows.push(cols.into_iter().map(|c| (c, rng.gen_range(0..p))).collect());
        }
        if weighted_rank(&rows, m, p)? == n {
            full += 1;
        }
    }
    Ok(RankExperiment {
        n,
        m,
        k,
        trials,
        full_rank_count: full,
        field: Field::Prime(p),
    })
}

/// Ratio `n / m` where the empirical full-rank fraction crosses 1/2,
/// by bisection over `m` with common random rows across steps.
pub fn empirical_threshold(k: usize, n: usize, trials: usize, tol: f64, seed: u64) -> Result<f64> {
    if n == 0 || trials == 0 || !(tol > 0.0) {
        return Err(Error::InvalidParameter("need n, trials, tol > 0".into()));
    }
    let frac = |ratio: f64| -> Result<f64> {
        let m = ((n as f64 / ratio).round() as usize).max(k);
        Ok(rank_mc_gf2(n, m, k, trials, seed)?.fraction())
    };
    let (mut lo, mut hi) = (0.5, 1.0);
    if frac(lo)? < 0.5 || frac(hi)? >= 0.5 {
        return Err(Error::ConvergenceFailure(format!(
            "full-rank fraction does not cross 1/2 on [{lo}, {hi}]"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if frac(mid)? >= 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub(crate) fn warn_if_above_threshold(k: usize, n: usize, m: usize) {
    if k < 3 || n < 2 {
        return;
    }
    if let Ok(t) = beta_k(k, 1e-5) {
        if m as f64 <= t.beta_inverse * n as f64 {
            log::warn!(
                "m/n = {:.4} is at or below 1/beta_{k} = {:.4}; construction will usually fail for large n",
                m as f64 / n as f64,
                t.beta_inverse
            );
        }
    }
}
