use super::seeded::SeededHasher;
use crate::error::{Error, Result};

/// Fixed-point one: cumulative probabilities are scaled by `2^64`.
pub const FIXED_ONE: u128 = 1 << 64;

/// Distribution function of `Binomial(n, p)` conditioned on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedBinomialTable {
    n: u64,
    p: f64,
    lo: usize,
    hi: usize,
    cdf: Vec<f64>,
    fixed: Vec<u128>,
    /// `cuts[i]` separates outcome `lo + i` from `lo + i + 1`.
    cuts: Vec<u128>,
}

/// Tabulates `F(i) = P(X <= i | lo <= X <= hi)` for `X ~ Binomial(n, p)`.
///
/// Probabilities are accumulated from log-space terms, so tails far below
/// `f64::MIN_POSITIVE` relative to the mode do not disturb the result.
pub fn build_binomial_table(n: u64, p: f64, lo: usize, hi: usize) -> Result<ConditionedBinomialTable> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} outside (0, 1)")));
    }
    if lo > hi || hi as u64 > n {
        return Err(Error::InvalidParameter(format!(
            "bounds [{lo}, {hi}] invalid for n = {n}"
        )));
    }
    let log_odds = (p / (1.0 - p)).ln();
    let mut log_pmf = (n as f64) * (-p).ln_1p();
    let mut logs = Vec::with_capacity(hi - lo + 1);
    for i in 0..=hi {
        if i >= lo {
            logs.push(log_pmf);
        }
        log_pmf += ((n - i as u64) as f64 / (i as f64 + 1.0)).ln() + log_odds;
    }
    let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mass: f64 = logs.iter().map(|&l| (l - peak).exp()).sum();
    let log_mass = peak + mass.ln();
    if !log_mass.is_finite() || log_mass.exp() == 0.0 {
        return Err(Error::EmptySupport { lo, hi });
    }

    let pmf: Vec<f64> = logs.iter().map(|&l| (l - peak).exp() / mass).collect();
    let mut cdf = Vec::with_capacity(pmf.len());
    let mut acc = 0.0;
    for &q in &pmf {
        acc += q;
        cdf.push(acc.min(1.0));
    }
    *cdf.last_mut().expect("nonempty") = 1.0;

    let mut fixed = Vec::with_capacity(cdf.len());
    let mut prev = 0u128;
    for (i, &c) in cdf.iter().enumerate() {
        let mut v = if i + 1 == cdf.len() {
            FIXED_ONE
        } else {
            ((c * FIXED_ONE as f64) as u128).min(FIXED_ONE - 1)
        };
        if v <= prev {
            v = prev + 1;
        }
        fixed.push(v);
        prev = v;
    }
    let cuts = fixed.windows(2).map(|w| (w[0] + w[1]) / 2).collect();
    Ok(ConditionedBinomialTable {
        n,
        p,
        lo,
        hi,
        cdf,
        fixed,
        cuts,
    })
}

/// Bounds and success probability of the Cooper-regime row weights for `n`
/// keys: `p = 2 ln n / n`, weights in `[ceil(ln n / 2), floor(4 ln n)]`.
pub fn cooper_parameters(n: u64) -> (f64, usize, usize) {
    let ln = (n as f64).ln();
    let p = 2.0 * ln / n as f64;
    let lo = (0.5 * ln).ceil() as usize;
    let hi = ((4.0 * ln).floor() as usize).min(n as usize);
    (p, lo.max(1), hi)
}

impl ConditionedBinomialTable {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.hi
    }

    /// `F(i)` as a float; 0 below `lo`, 1 from `hi` on.
    pub fn cdf(&self, i: usize) -> f64 {
        if i < self.lo {
            0.0
        } else if i >= self.hi {
            1.0
        } else {
            self.cdf[i - self.lo]
        }
    }

    /// `F(i)` in 64-bit fixed point (`FIXED_ONE` = 1).
    pub fn cdf_fixed(&self) -> &[u128] {
        &self.fixed
    }

    /// Outcome for a uniform 64-bit fraction `u / 2^64`.
    ///
    /// Outcome `i` covers `[(F(i-1)+F(i))/2, (F(i)+F(i+1))/2)`; the two end
    /// outcomes extend to 0 and 1.
    pub fn sample_fraction(&self, u: u64) -> usize {
        let u = u128::from(u);
        self.lo + self.cuts.partition_point(|&c| c <= u)
    }

    /// Probability the midpoint sampler assigns to outcome `i`.
    pub fn cell_probability(&self, i: usize) -> f64 {
        if i < self.lo || i > self.hi {
            return 0.0;
        }
        let idx = i - self.lo;
        let lower = if idx == 0 { 0 } else { self.cuts[idx - 1] };
        let upper = if idx == self.cuts.len() {
            FIXED_ONE
        } else {
            self.cuts[idx]
        };
        (upper - lower) as f64 / FIXED_ONE as f64
    }
}

/// Row weight `k(x)` for `key`, from the fixed-point midpoint rule.
pub fn sample_conditioned(tbl: &ConditionedBinomialTable, key: &[u8], h: &SeededHasher) -> usize {
    tbl.sample_fraction(h.hash(key))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn choose(n: u64, k: u64) -> f64 {
        // Pascal's triangle, exact in f64 for n <= 60.
        let mut row = vec![1.0f64];
        for _ in 0..n {
            let mut next = vec![1.0; row.len() + 1];
            for j in 1..row.len() {
                next[j] = row[j - 1] + row[j];
            }
            row = next;
        }
        row[k as usize]
    }

    #[test]
    fn matches_exact_cdf_n10() {
        let t = build_binomial_table(10, 0.5, 0, 10).unwrap();
        let mut acc = 0.0;
        for i in 0..=10u64 {
            acc += choose(10, i) / 1024.0;
            assert!((t.cdf(i as usize) - acc).abs() < 1e-12, "i = {i}");
        }
    }

    #[test]
    fn point_mass() {
        let t = build_binomial_table(100, 0.3, 30, 30).unwrap();
        for u in [0u64, 1, u64::MAX / 2, u64::MAX] {
            assert_eq!(t.sample_fraction(u), 30);
        }
        assert_eq!(t.cdf_fixed(), &[FIXED_ONE]);
    }

    #[test]
    fn zero_fraction_gives_lo() {
        let t = build_binomial_table(4096, 0.004, 4, 33).unwrap();
        assert_eq!(t.sample_fraction(0), 4);
        assert_eq!(t.sample_fraction(u64::MAX), 33);
    }

    #[test]
    fn empty_support() {
        assert_eq!(
            build_binomial_table(1000, 0.001, 900, 1000),
            Err(Error::EmptySupport { lo: 900, hi: 1000 })
        );
    }

    #[test]
    fn cut_tails_are_small_in_cooper_regime() {
        let n = 1u64 << 16;
        let (p, lo, hi) = cooper_parameters(n);
        let full = build_binomial_table(n, p, 0, n as usize).unwrap();
        let below = full.cdf(lo - 1);
        let above = 1.0 - full.cdf(hi);
        let bound = 1.0 / n as f64;
        assert!(below <= bound, "lower tail {below}");
        assert!(above <= bound, "upper tail {above}");
    }

    #[test]
    fn cdf_monotone_and_bounded() {
        for &(n, p) in &[(16u64, 0.3), (1024, 0.0135), (4096, 0.004), (1 << 14, 0.0012)] {
            let (_, lo, hi) = cooper_parameters(n);
            let t = build_binomial_table(n, p, lo, hi.max(lo)).unwrap();
            let mut prev = 0.0;
            for i in lo..=hi {
                let c = t.cdf(i);
                assert!((0.0..=1.0).contains(&c) && c >= prev);
                prev = c;
            }
            assert!(t.cdf_fixed().windows(2).all(|w| w[0] < w[1]));
            assert_eq!(*t.cdf_fixed().last().unwrap(), FIXED_ONE);
        }
    }

    #[test]
    fn sampled_pmf_matches_cells() {
        let n = 4096u64;
        let (p, lo, hi) = cooper_parameters(n);
        let t = build_binomial_table(n, p, lo, hi).unwrap();
        let h = SeededHasher::new(31337, 0);
        let samples = 100_000u64;
        let mut counts = vec![0u64; hi + 1];
        for i in 0..samples {
            counts[sample_conditioned(&t, &i.to_le_bytes(), &h)] += 1;
        }
        // Pool cells with expected count < 5 into their neighbours.
        let mut chi2 = 0.0;
        let mut dof = 0;
        let (mut obs, mut exp) = (0.0, 0.0);
        for i in lo..=hi {
            obs += counts[i] as f64;
            exp += t.cell_probability(i) * samples as f64;
            if exp >= 5.0 {
                chi2 += (obs - exp).powi(2) / exp;
                dof += 1;
                obs = 0.0;
                exp = 0.0;
            }
        }
        if exp > 0.0 {
            chi2 += (obs - exp).powi(2) / exp;
            dof += 1;
        }
        dof -= 1;
        // Wilson-Hilferty approximation to the 99.9% chi-square quantile.
        let z = 3.090_232;
        let d = dof as f64;
        let crit = d * (1.0 - 2.0 / (9.0 * d) + z * (2.0 / (9.0 * d)).sqrt()).powi(3);
        assert!(chi2 < crit, "chi2 {chi2} >= {crit} (dof {dof})");
    }
}
