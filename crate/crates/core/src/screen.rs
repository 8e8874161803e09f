//! All-pairs dependence screening over a variable matrix.
//!
//! Each variable is rank-transformed and bit-packed once; every pair is then
//! tested with the fixed-depth Max BET and the per-pair p-values are
//! Bonferroni-adjusted across the `C(p, 2)` comparisons. Pairs are scheduled
//! over a fixed enumeration and reduced in order, so reports are
//! byte-identical for any worker count.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expansion::{binary_expand, empirical_copula, BitMatrix, Provenance, SampleSet, TiePolicy};
use crate::inference::{max_bet, PvalueMethod};

/// Tie handling for screening input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScreenTies {
    /// Drop any variable with tied values and record it in the report.
    Drop,
    /// Break ties at random (seeded).
    Random { seed: u64 },
}

#[derive(Debug, Clone, Copy)]
pub struct ScreenConfig {
    /// Expansion depth for both variables of every pair.
    pub depth: u32,
    pub alpha: f64,
    pub method: PvalueMethod,
    pub ties: ScreenTies,
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
}

impl Default for ScreenConfig {
    fn default() -> Self {
        ScreenConfig {
            depth: 2,
            alpha: 0.1,
            method: PvalueMethod::NormalApprox { continuity: false },
            ties: ScreenTies::Drop,
            workers: 0,
        }
    }
}

/// One screened pair. `p_raw` is the pair's Max BET adjusted p-value (the
/// within-pair Bonferroni over cross interactions); `p_adjusted` multiplies
/// it by the number of pairs screened.
#[derive(Debug, Clone, Serialize)]
pub struct ScreenPair {
    pub var_a: String,
    pub var_b: String,
    pub s: i64,
    pub interaction: String,
    pub p_raw: f64,
    pub p_adjusted: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScreenReport {
    /// Variables retained after the tie filter, in input order.
    pub variables: Vec<String>,
    /// Variables dropped for tied values, with the offending observations.
    pub dropped: Vec<String>,
    /// Number of pairwise comparisons adjusted over.
    pub n_pairs: u64,
    pub alpha: f64,
    /// Sorted ascending by adjusted p, then raw p, then variable names.
    pub pairs: Vec<ScreenPair>,
}

impl ScreenReport {
    pub const CSV_HEADER: &'static str = "var_a,var_b,s,interaction,p_raw,p_adjusted,significant";

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for p in &self.pairs {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                p.var_a, p.var_b, p.s, p.interaction, p.p_raw, p.p_adjusted, p.significant
            )?;
        }
        Ok(())
    }

    /// Pairs flagged at the configured level.
    pub fn significant(&self) -> impl Iterator<Item = &ScreenPair> {
        self.pairs.iter().filter(|p| p.significant)
    }
}

fn has_ties(values: &[f64]) -> bool {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.windows(2).any(|w| w[0] == w[1])
}

/// Screen every pair of variables for dependence at a fixed depth.
///
/// `data` holds one slice per variable, all of equal length `n`. Bit
/// matrices are computed once per variable; the result does not depend on
/// `workers`.
pub fn screen_all_pairs(
    names: &[String],
    data: &[Vec<f64>],
    config: &ScreenConfig,
) -> Result<ScreenReport> {
    if names.len() != data.len() {
        return Err(Error::LengthMismatch {
            left: names.len(),
            right: data.len(),
        });
    }
    let n = data.first().map_or(0, |c| c.len());
    for col in data {
        if col.len() != n {
            return Err(Error::LengthMismatch {
                left: n,
                right: col.len(),
            });
        }
    }

    // Tie policy first: mirror the exclusion rule by dropping offenders.
    let mut retained: Vec<(String, &Vec<f64>)> = Vec::new();
    let mut dropped = Vec::new();
    for (name, col) in names.iter().zip(data) {
        match config.ties {
            ScreenTies::Drop if has_ties(col) => dropped.push(name.clone()),
            _ => retained.push((name.clone(), col)),
        }
    }

    let tie_policy = match config.ties {
        ScreenTies::Drop => TiePolicy::Error,
        ScreenTies::Random { seed } => TiePolicy::Random { seed },
    };

    // Rank-transform and pack each retained variable once. Ranks per
    // variable are exactly the ranks the pair copula would produce.
    let bits: Vec<BitMatrix> = retained
        .iter()
        .map(|(_, col)| {
            let s = SampleSet::new((*col).clone(), (*col).clone())?;
            let c = empirical_copula(&s, tie_policy)?;
            let (u, _) = binary_expand(&c, config.depth);
            Ok(u)
        })
        .collect::<Result<_>>()?;

    let p = retained.len();
    let n_pairs = (p as u64) * (p as u64).saturating_sub(1) / 2;
    let mut pair_indices = Vec::with_capacity(n_pairs as usize);
    for i in 0..p {
        for j in (i + 1)..p {
            pair_indices.push((i, j));
        }
    }

    let run = |(i, j): (usize, usize)| -> Result<ScreenPair> {
        let result = max_bet(
            &bits[i],
            &bits[j],
            config.depth,
            config.depth,
            Provenance::EmpiricalRank,
            config.method,
        )?;
        let p_adjusted = (n_pairs as f64 * result.p_adjusted).min(1.0);
        Ok(ScreenPair {
            var_a: retained[i].0.clone(),
            var_b: retained[j].0.clone(),
            s: result.s_extreme,
            interaction: result.strongest.label(),
            p_raw: result.p_adjusted,
            p_adjusted,
            significant: p_adjusted <= config.alpha,
        })
    };

    let mut pairs: Vec<ScreenPair> = if config.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?;
        pool.install(|| pair_indices.par_iter().map(|&ij| run(ij)).collect::<Result<_>>())?
    } else {
        pair_indices.par_iter().map(|&ij| run(ij)).collect::<Result<_>>()?
    };

    pairs.sort_by(|a, b| {
        a.p_adjusted
            .total_cmp(&b.p_adjusted)
            .then(a.p_raw.total_cmp(&b.p_raw))
            .then(a.var_a.cmp(&b.var_a))
            .then(a.var_b.cmp(&b.var_b))
    });

    Ok(ScreenReport {
        variables: retained.into_iter().map(|(name, _)| name).collect(),
        dropped,
        n_pairs,
        alpha: config.alpha,
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::sample_null;

    fn null_matrix(p: usize, n: usize, seed: u64) -> (Vec<String>, Vec<Vec<f64>>) {
        let names = (0..p).map(|i| format!("v{i}")).collect();
        let data = (0..p)
            .map(|i| sample_null(n, seed + i as u64).x().to_vec())
            .collect();
        (names, data)
    }

    #[test]
    fn planted_pair_is_flagged() {
        let (mut names, mut data) = null_matrix(2, 128, 50);
        names.push("planted".to_string());
        data.push(data[0].clone()); // exact copy of v0: Y = X
        let report = screen_all_pairs(&names, &data, &ScreenConfig::default()).unwrap();
        let top = &report.pairs[0];
        assert_eq!(
            (top.var_a.as_str(), top.var_b.as_str()),
            ("v0", "planted")
        );
        assert!(top.significant);
        assert!(top.p_adjusted < 1e-6, "p = {}", top.p_adjusted);
        assert_eq!(report.n_pairs, 3);
    }

    #[test]
    fn tied_variables_are_dropped_with_reason() {
        let (mut names, mut data) = null_matrix(2, 64, 51);
        names.push("tied".to_string());
        let mut col = sample_null(64, 52).x().to_vec();
        col[3] = col[40];
        data.push(col);
        let report = screen_all_pairs(&names, &data, &ScreenConfig::default()).unwrap();
        assert_eq!(report.dropped, vec!["tied".to_string()]);
        assert_eq!(report.variables.len(), 2);
        assert_eq!(report.n_pairs, 1);
    }

    #[test]
    fn null_screen_rarely_flags() {
        let (names, data) = null_matrix(12, 128, 53);
        let report = screen_all_pairs(&names, &data, &ScreenConfig::default()).unwrap();
        assert_eq!(report.significant().count(), 0);
        // Sorted ascending by adjusted p.
        for w in report.pairs.windows(2) {
            assert!(w[0].p_adjusted <= w[1].p_adjusted);
        }
    }

    #[test]
    fn reports_are_identical_across_worker_counts() {
        let (names, data) = null_matrix(8, 64, 54);
        let mut config = ScreenConfig {
            workers: 1,
            ..ScreenConfig::default()
        };
        let a = screen_all_pairs(&names, &data, &config).unwrap();
        config.workers = 8;
        let b = screen_all_pairs(&names, &data, &config).unwrap();
        let mut csv_a = Vec::new();
        let mut csv_b = Vec::new();
        a.write_csv(&mut csv_a).unwrap();
        b.write_csv(&mut csv_b).unwrap();
        assert_eq!(csv_a, csv_b);
    }

    #[test]
    fn exact_method_works_for_small_samples() {
        let (names, data) = null_matrix(3, 16, 55);
        let config = ScreenConfig {
            method: PvalueMethod::Exact,
            ..ScreenConfig::default()
        };
        let report = screen_all_pairs(&names, &data, &config).unwrap();
        assert_eq!(report.pairs.len(), 3);
        for p in &report.pairs {
            assert!(p.p_raw > 0.0 && p.p_raw <= 1.0);
        }
    }
}
