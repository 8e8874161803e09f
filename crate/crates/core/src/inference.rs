//! Null distributions, exact and approximate p-values, and the Max BET
//! multiple-testing procedures.
//!
//! Under known marginal CDFs a symmetry statistic satisfies
//! `(S + n)/2 ~ Binomial(n, 1/2)`; under empirical ranks with equal margins
//! `(S + n)/4 ~ Hypergeometric(n, n/2, n/2)`. Unequal margins condition on
//! the per-interaction marginal positives and fall back to a Fisher 2x2
//! tail, with a normal approximation for large samples. All two-sided tails
//! order outcomes by `|S - E[S]|`.

use std::collections::HashMap;

use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::expansion::{BitMatrix, Provenance};
use crate::interactions::{
    contingency, enumerate_cross, symmetry_from_table, ContingencyTable, InteractionIndex,
    SymmetryStats,
};

/// Smallest value an exact tail may report; anything lower is floored here
/// rather than reported as zero.
pub const P_FLOOR: f64 = f64::MIN_POSITIVE;

fn floor_p(p: f64) -> (f64, bool) {
    if p < P_FLOOR {
        (P_FLOOR, true)
    } else {
        (p.min(1.0), false)
    }
}

/// Standard normal upper tail, accurate far into the tail.
fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Two-sided exact binomial tail `P(|S| >= |s|)` for
/// `(S + n)/2 ~ Binomial(n, 1/2)`.
///
/// For `n <= 1074` the pmf is accumulated by the multiplicative recurrence
/// starting from the exactly representable `2^-n`, summing each tail from
/// the extreme inward; this keeps the saturated case `|s| = n` exactly
/// `2/2^n`. Larger `n` falls back to log-space factorials with flooring.
pub fn binomial_pvalue(s: i64, n: u64) -> Result<f64> {
    binomial_two_sided(s, n).map(|(p, _)| p)
}

pub(crate) fn binomial_two_sided(s: i64, n: u64) -> Result<(f64, bool)> {
    if s.unsigned_abs() > n {
        return Err(Error::OutOfRange { s, n });
    }
    if (s + n as i64) % 2 != 0 {
        return Err(Error::ParityViolation { s, n });
    }
    let t = s.unsigned_abs();
    if t == 0 {
        return Ok((1.0, false));
    }
    let j = (n - t) / 2; // largest k in the lower qualifying tail
    let lower = if n <= 1074 {
        let mut pmf = 2.0f64.powi(-(n as i32));
        let mut acc = pmf;
        for k in 1..=j {
            pmf = pmf * (n - k + 1) as f64 / k as f64;
            acc += pmf;
        }
        acc
    } else {
        let ln2 = std::f64::consts::LN_2;
        let lnf = LnFactorials::new(n);
        let mut acc = 0.0;
        for k in 0..=j {
            acc += (lnf.ln_choose(n, k) - n as f64 * ln2).exp();
        }
        acc
    };
    Ok(floor_p(2.0 * lower))
}

/// Table of `ln(k!)` for `k <= n`.
struct LnFactorials(Vec<f64>);

impl LnFactorials {
    fn new(n: u64) -> Self {
        LnFactorials((0..=n).map(|k| ln_gamma(k as f64 + 1.0)).collect())
    }

    fn ln_choose(&self, n: u64, k: u64) -> f64 {
        self.0[n as usize] - self.0[k as usize] - self.0[(n - k) as usize]
    }
}

/// Two-sided tail of `K ~ Hypergeometric(n; r, c)` with outcomes ordered by
/// `|K - rc/n|`, compared exactly through the integer `|nK - rc|`. Both
/// qualifying tails are summed from their extremes inward. The factorial
/// table is passed in so batch callers build it once per sample size.
fn hyper_two_sided(lnf: &LnFactorials, k_obs: u64, n: u64, r: u64, c: u64) -> (f64, bool) {
    let lo = (r + c).saturating_sub(n);
    let hi = r.min(c);
    if lo >= hi {
        return (1.0, false);
    }
    let dev = |k: u64| (n as i128 * k as i128 - r as i128 * c as i128).unsigned_abs();
    let dev_obs = dev(k_obs);
    if dev_obs == 0 {
        return (1.0, false);
    }
    let ln_denom = lnf.ln_choose(n, c);
    let ln_pmf = |k: u64| lnf.ln_choose(r, k) + lnf.ln_choose(n - r, c - k) - ln_denom;
    let mut p = 0.0;
    let mut k = lo;
    while k <= hi && dev(k) >= dev_obs {
        p += ln_pmf(k).exp();
        k += 1;
    }
    let left_stop = k;
    if left_stop > hi {
        return (1.0, false);
    }
    let mut k = hi;
    while k >= left_stop && dev(k) >= dev_obs {
        p += ln_pmf(k).exp();
        if k == 0 {
            break;
        }
        k -= 1;
    }
    floor_p(p)
}

/// Two-sided exact tail for `(S + n)/4 ~ Hypergeometric(n, n/2, n/2)`, the
/// equal-margin empirical-rank null.
pub fn hypergeom_pvalue(s: i64, n: u64) -> Result<f64> {
    hypergeom_two_sided(s, n).map(|(p, _)| p)
}

pub(crate) fn hypergeom_two_sided(s: i64, n: u64) -> Result<(f64, bool)> {
    if !n.is_multiple_of(2) {
        return Err(Error::MarginMismatch { n });
    }
    if s.unsigned_abs() > n {
        return Err(Error::OutOfRange { s, n });
    }
    if (s + n as i64) % 4 != 0 {
        return Err(Error::ParityViolation { s, n });
    }
    let x = ((s + n as i64) / 4) as u64;
    Ok(hyper_two_sided(&LnFactorials::new(n), x, n, n / 2, n / 2))
}

fn fisher_cell(s: i64, n: u64, r: u64, c: u64) -> Result<u64> {
    let num = s + 2 * (r + c) as i64 - n as i64;
    if num < 0 || num % 4 != 0 {
        return Err(Error::InfeasibleCell { s, n, r, c });
    }
    let k = (num / 4) as u64;
    let lo = (r + c).saturating_sub(n);
    let hi = r.min(c);
    if k < lo || k > hi {
        return Err(Error::InfeasibleCell { s, n, r, c });
    }
    Ok(k)
}

/// Exact two-sided tail with unequal margins: `S = 4K - 2r - 2c + n` with
/// `K ~ Hypergeometric(n; r, c)`, outcomes ordered by `|S - E[S]|`. With
/// `r = c = n/2` this is bit-for-bit the [`hypergeom_pvalue`] path.
pub fn fisher_2x2_pvalue(s: i64, n: u64, r_pos: u64, c_pos: u64) -> Result<f64> {
    fisher_two_sided(s, n, r_pos, c_pos).map(|(p, _)| p)
}

pub(crate) fn fisher_two_sided(s: i64, n: u64, r: u64, c: u64) -> Result<(f64, bool)> {
    fisher_two_sided_with(&LnFactorials::new(n), s, n, r, c)
}

fn fisher_two_sided_with(
    lnf: &LnFactorials,
    s: i64,
    n: u64,
    r: u64,
    c: u64,
) -> Result<(f64, bool)> {
    if r == 0 || c == 0 || r >= n || c >= n {
        return Err(Error::Precondition(format!(
            "marginal positives must satisfy 0 < r, c < n (got r = {r}, c = {c}, n = {n})"
        )));
    }
    let k = fisher_cell(s, n, r, c)?;
    Ok(hyper_two_sided(lnf, k, n, r, c))
}

/// Normal approximation to the Fisher tail. Returns `(z, p)` with
/// `z = (s - E[S]) / sd(S)` and `sd(S) = 4 sqrt(rc(n-r)(n-c) / (n^2(n-1)))`.
/// The continuity flag shrinks `|s - E[S]|` by 2 (half a unit of the
/// underlying cell count) before dividing.
pub fn normal_approx_pvalue(
    s: i64,
    n: u64,
    r_pos: u64,
    c_pos: u64,
    continuity: bool,
) -> Result<(f64, f64)> {
    if r_pos == 0 || c_pos == 0 || r_pos >= n || c_pos >= n {
        return Err(Error::DegenerateVariance {
            n,
            r: r_pos,
            c: c_pos,
        });
    }
    fisher_cell(s, n, r_pos, c_pos)?;
    let (nf, rf, cf) = (n as f64, r_pos as f64, c_pos as f64);
    let mean = 4.0 * rf * cf / nf - 2.0 * rf - 2.0 * cf + nf;
    let var = 16.0 * rf * cf * (nf - rf) * (nf - cf) / (nf * nf * (nf - 1.0));
    let sd = var.sqrt();
    if sd.is_nan() || sd <= 0.0 {
        return Err(Error::DegenerateVariance {
            n,
            r: r_pos,
            c: c_pos,
        });
    }
    let dev = s as f64 - mean;
    let shift = if continuity { 2.0 } else { 0.0 };
    let magnitude = (dev.abs() - shift).max(0.0);
    let z = magnitude / sd * dev.signum();
    let p = (2.0 * normal_sf(magnitude / sd)).min(1.0);
    Ok((z, floor_p(p).0))
}

/// Which per-interaction null was used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestMethod {
    BinomialExact,
    HypergeomExact,
    NormalApprox,
    Fisher2x2,
}

impl TestMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            TestMethod::BinomialExact => "binomial-exact",
            TestMethod::HypergeomExact => "hypergeom-exact",
            TestMethod::NormalApprox => "normal-approx",
            TestMethod::Fisher2x2 => "fisher-2x2",
        }
    }
}

/// One tested cross interaction.
#[derive(Debug, Clone)]
pub struct SymmetryTestResult {
    pub index: InteractionIndex,
    pub s: i64,
    pub p: f64,
    /// Normal-approximation z statistic, when that method was used.
    pub z: Option<f64>,
    pub method: TestMethod,
    /// The exact tail underflowed and was floored at [`P_FLOOR`].
    pub floored: bool,
}

/// Depth configuration a BET result was produced under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Depths {
    Fixed { d1: u32, d2: u32 },
    TwoStage { d_max: u32 },
}

/// Outcome of a Max BET run: every tested interaction, the strongest one,
/// and the Bonferroni-adjusted p-value. `n_tests` is the effective
/// multiplier, so `p_adjusted = min(1, n_tests * p_strongest)` in both the
/// fixed-depth and two-stage forms.
#[derive(Debug, Clone)]
pub struct BetResult {
    pub depths: Depths,
    pub n: u64,
    pub per_interaction: Vec<SymmetryTestResult>,
    pub strongest: InteractionIndex,
    pub s_extreme: i64,
    pub p_adjusted: f64,
    pub n_tests: u64,
}

/// P-value route for the BET procedures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PvalueMethod {
    Exact,
    NormalApprox { continuity: bool },
}

/// Strict "is `a` stronger than `b`" ordering: smaller p, then larger |s|,
/// then shallower depths, then smaller packed index.
fn stronger(a: &SymmetryTestResult, b: &SymmetryTestResult) -> bool {
    if a.p != b.p {
        return a.p < b.p;
    }
    if a.s.abs() != b.s.abs() {
        return a.s.abs() > b.s.abs();
    }
    let (ad, bd) = (a.index.depths(), b.index.depths());
    if ad != bd {
        return ad < bd;
    }
    a.index.packed() < b.index.packed()
}

struct InteractionTester<'a> {
    stats: &'a SymmetryStats,
    provenance: Provenance,
    method: PvalueMethod,
    memo: HashMap<(i64, u64, u64), (f64, bool)>,
    lnf: Option<LnFactorials>,
}

impl<'a> InteractionTester<'a> {
    fn new(stats: &'a SymmetryStats, provenance: Provenance, method: PvalueMethod) -> Self {
        // The binomial route never needs factorials; the Fisher route
        // shares one table across all interactions of the run.
        let lnf = match (provenance, method) {
            (Provenance::EmpiricalRank, PvalueMethod::Exact) => {
                Some(LnFactorials::new(stats.n()))
            }
            _ => None,
        };
        Self {
            stats,
            provenance,
            method,
            memo: HashMap::new(),
            lnf,
        }
    }

    /// Packed position of `idx` (given at its natural depths) inside the
    /// full-depth statistics vector.
    fn lift(&self, idx: &InteractionIndex) -> (u32, u32, u32) {
        let (sd1, sd2) = self.stats.depths();
        let (d1, d2) = idx.depths();
        let a = idx.a_mask() << (sd1 - d1);
        let b = idx.b_mask() << (sd2 - d2);
        ((a << sd2) | b, a << sd2, b)
    }

    fn test(&mut self, idx: InteractionIndex) -> Result<SymmetryTestResult> {
        let n = self.stats.n();
        let (m, m_a, m_b) = self.lift(&idx);
        let s = self.stats.at_packed(m);
        let (p, z, method, floored) = match (self.provenance, self.method) {
            (Provenance::KnownCdf, PvalueMethod::Exact) => {
                let key = (s.abs(), u64::MAX, u64::MAX);
                let (p, fl) = match self.memo.get(&key) {
                    Some(&v) => v,
                    None => {
                        let v = binomial_two_sided(s, n)?;
                        self.memo.insert(key, v);
                        v
                    }
                };
                (p, None, TestMethod::BinomialExact, fl)
            }
            (Provenance::KnownCdf, PvalueMethod::NormalApprox { continuity }) => {
                // Binomial null: E[S] = 0, sd = sqrt(n); half a step of the
                // underlying count is 1 on the S scale.
                let shift = if continuity { 1.0 } else { 0.0 };
                let magnitude = (s.abs() as f64 - shift).max(0.0);
                let z = magnitude / (n as f64).sqrt() * (s as f64).signum();
                let p = (2.0 * normal_sf(z.abs())).min(1.0);
                let (p, fl) = floor_p(p);
                (p, Some(z), TestMethod::NormalApprox, fl)
            }
            (Provenance::EmpiricalRank, method) => {
                let r = ((n as i64 + self.stats.at_packed(m_a)) / 2) as u64;
                let c = ((n as i64 + self.stats.at_packed(m_b)) / 2) as u64;
                match method {
                    PvalueMethod::Exact => {
                        let key = (s, r, c);
                        let (p, fl) = match self.memo.get(&key) {
                            Some(&v) => v,
                            None => {
                                let v = fisher_two_sided(s, n, r, c)?;
                                self.memo.insert(key, v);
                                v
                            }
                        };
                        let balanced = n.is_multiple_of(2) && r == n / 2 && c == n / 2;
                        let tag = if balanced {
                            TestMethod::HypergeomExact
                        } else {
                            TestMethod::Fisher2x2
                        };
                        (p, None, tag, fl)
                    }
                    PvalueMethod::NormalApprox { continuity } => {
                        let (z, p) = normal_approx_pvalue(s, n, r, c, continuity)?;
                        (p, Some(z), TestMethod::NormalApprox, p <= P_FLOOR)
                    }
                }
            }
        };
        Ok(SymmetryTestResult {
            index: idx,
            s,
            p,
            z,
            method,
            floored,
        })
    }
}

fn check_sample_size(n: usize, depth: u32) -> Result<()> {
    let required = 1u64 << depth;
    if (n as u64) < required {
        return Err(Error::SampleTooSmall { n, depth, required });
    }
    Ok(())
}

/// Max BET at fixed depths: test every cross interaction, report the
/// strongest, and Bonferroni-adjust by `(2^d1 - 1)(2^d2 - 1)`.
pub fn max_bet(
    u: &BitMatrix,
    v: &BitMatrix,
    d1: u32,
    d2: u32,
    provenance: Provenance,
    method: PvalueMethod,
) -> Result<BetResult> {
    assert!(d1 >= 1 && d2 >= 1, "depths must be at least 1");
    check_sample_size(u.n().min(v.n()), d1.max(d2))?;
    let stats = symmetry_from_table(&contingency(u, v, d1, d2)?);
    let mut tester = InteractionTester::new(&stats, provenance, method);
    let mut per_interaction = Vec::new();
    let mut best: Option<usize> = None;
    for idx in enumerate_cross(d1, d2) {
        let r = tester.test(idx)?;
        match best {
            Some(b) if !stronger(&r, &per_interaction[b]) => {}
            _ => best = Some(per_interaction.len()),
        }
        per_interaction.push(r);
    }
    let best = &per_interaction[best.expect("at least one cross interaction")];
    let n_tests = per_interaction.len() as u64;
    let p_adjusted = (n_tests as f64 * best.p).min(1.0);
    Ok(BetResult {
        depths: Depths::Fixed { d1, d2 },
        n: stats.n(),
        strongest: best.index,
        s_extreme: best.s,
        p_adjusted,
        n_tests,
        per_interaction,
    })
}

/// Interactions first appearing at depth `d`, i.e. those in
/// `sigma(U_d, V_d)` that involve the deepest bit of either variable.
pub fn added_interactions(d: u32) -> Vec<InteractionIndex> {
    enumerate_cross(d, d)
        .into_iter()
        .filter(|idx| idx.a_mask() & 1 == 1 || idx.b_mask() & 1 == 1)
        .collect()
}

/// Two-stage BET: for each depth `d = 1..=d_max` test the interactions
/// added at that depth with a within-depth Bonferroni over their count,
/// then control across depths by a further factor of `d_max`.
pub fn two_stage_bet(
    u: &BitMatrix,
    v: &BitMatrix,
    d_max: u32,
    provenance: Provenance,
    method: PvalueMethod,
) -> Result<BetResult> {
    assert!(d_max >= 1, "d_max must be at least 1");
    check_sample_size(u.n().min(v.n()), d_max)?;
    let stats = symmetry_from_table(&contingency(u, v, d_max, d_max)?);
    let mut tester = InteractionTester::new(&stats, provenance, method);
    let mut per_interaction = Vec::new();
    let mut winner: Option<(f64, u64, usize)> = None; // (p_d, count_d, index of best)
    for d in 1..=d_max {
        let added = added_interactions(d);
        let count = added.len() as u64;
        let mut best: Option<usize> = None;
        for idx in added {
            let r = tester.test(idx)?;
            match best {
                Some(b) if !stronger(&r, &per_interaction[b]) => {}
                _ => best = Some(per_interaction.len()),
            }
            per_interaction.push(r);
        }
        let best = best.expect("added set is never empty");
        let p_d = (count as f64 * per_interaction[best].p).min(1.0);
        match winner {
            Some((p_best, _, _)) if p_d >= p_best => {}
            _ => winner = Some((p_d, count, best)),
        }
    }
    let (p_depth, count, best) = winner.expect("d_max >= 1");
    let best = &per_interaction[best];
    Ok(BetResult {
        depths: Depths::TwoStage { d_max },
        n: stats.n(),
        strongest: best.index,
        s_extreme: best.s,
        p_adjusted: (d_max as f64 * p_depth).min(1.0),
        n_tests: d_max as u64 * count,
        per_interaction,
    })
}

/// Classical chi-square test of independence on the contingency table.
#[derive(Debug, Clone, Copy)]
pub struct ChisqResult {
    pub stat: f64,
    pub df: u64,
    pub p: f64,
}

/// Conventional `sum (O - E)^2 / E` with independence-expected counts and
/// `(2^d1 - 1)(2^d2 - 1)` degrees of freedom. On equal-margin tables this
/// equals `(1/n) * sum of squared cross symmetry statistics` exactly.
pub fn chisq_test(t: &ContingencyTable) -> Result<ChisqResult> {
    let (d1, d2) = t.depths();
    let rows = 1u32 << d1;
    let cols = 1u32 << d2;
    let row_totals: Vec<u64> = (0..rows).map(|i| t.u_margin(i)).collect();
    let col_totals: Vec<u64> = (0..cols).map(|j| t.v_margin(j)).collect();
    if let Some(i) = row_totals.iter().position(|&r| r == 0) {
        return Err(Error::EmptyMargin { axis: "row", index: i });
    }
    if let Some(j) = col_totals.iter().position(|&c| c == 0) {
        return Err(Error::EmptyMargin { axis: "column", index: j });
    }
    let n = t.n() as f64;
    let mut stat = 0.0;
    for i in 0..rows {
        for j in 0..cols {
            let expected = row_totals[i as usize] as f64 * col_totals[j as usize] as f64 / n;
            let observed = t.counts()[((i << d2) | j) as usize] as f64;
            let diff = observed - expected;
            stat += diff * diff / expected;
        }
    }
    let df = ((1u64 << d1) - 1) * ((1u64 << d2) - 1);
    let dist = ChiSquared::new(df as f64).expect("positive degrees of freedom");
    Ok(ChisqResult {
        stat,
        df,
        p: dist.sf(stat).clamp(0.0, 1.0),
    })
}
