//! Copula transforms and truncated binary expansions.
//!
//! Raw paired samples are mapped to the unit square, either through the
//! marginal empirical CDFs (ranks) or through caller-supplied marginal CDFs,
//! and the first `d` bits of each coordinate are extracted into word-packed
//! columns so that downstream symmetry statistics reduce to XOR and popcount
//! over whole words.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};

/// Paired raw observations. Values must be finite; `x` and `y` have equal
/// length. The empty set is allowed so that generators can return `n = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl SampleSet {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: y.len(),
            });
        }
        for i in 0..x.len() {
            if !x[i].is_finite() || !y[i].is_finite() {
                return Err(Error::NonFiniteSample { index: i });
            }
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }
}

/// How the copula values were obtained. The empirical-rank case has exactly
/// equal margins, which selects the hypergeometric null downstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    KnownCdf,
    EmpiricalRank,
}

/// Tie handling for the rank transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TiePolicy {
    /// Refuse tied values.
    Error,
    /// Break ties uniformly at random; ranks stay a uniform permutation
    /// under the null. Deterministic given the seed.
    Random { seed: u64 },
}

/// Points on the unit square with values in (0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct CopulaSet {
    u: Vec<f64>,
    v: Vec<f64>,
    provenance: Provenance,
}

impl CopulaSet {
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }
}

/// Ranks of `values` (1-based), ties resolved per `policy`. The tie-break
/// stream for variable `var_index` is `seed ^ var_index` fed to ChaCha12 so
/// the two margins of one dataset use distinct substreams.
fn ranks(values: &[f64], variable: &str, var_index: u64, policy: TiePolicy) -> Result<Vec<usize>> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    match policy {
        TiePolicy::Error => {
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            for w in order.windows(2) {
                if values[w[0]] == values[w[1]] {
                    return Err(Error::TiesPresent {
                        variable: variable.to_string(),
                        first: w[0].min(w[1]),
                        second: w[0].max(w[1]),
                    });
                }
            }
        }
        TiePolicy::Random { seed } => {
            let mut rng = ChaCha12Rng::seed_from_u64(seed ^ var_index);
            let keys: Vec<u64> = (0..n).map(|_| rng.random()).collect();
            order.sort_by(|&a, &b| {
                values[a]
                    .total_cmp(&values[b])
                    .then(keys[a].cmp(&keys[b]))
                    .then(a.cmp(&b))
            });
        }
    }
    let mut rank = vec![0usize; n];
    for (pos, &i) in order.iter().enumerate() {
        rank[i] = pos + 1;
    }
    Ok(rank)
}

/// Marginal empirical-CDF transform: `u_i = rank(x_i) / n`, likewise for `v`.
pub fn empirical_copula(s: &SampleSet, policy: TiePolicy) -> Result<CopulaSet> {
    let n = s.len();
    if n == 0 {
        return Err(Error::Precondition("empirical copula needs n >= 1".into()));
    }
    let rx = ranks(s.x(), "x", 0, policy)?;
    let ry = ranks(s.y(), "y", 1, policy)?;
    let nf = n as f64;
    Ok(CopulaSet {
        u: rx.iter().map(|&r| r as f64 / nf).collect(),
        v: ry.iter().map(|&r| r as f64 / nf).collect(),
        provenance: Provenance::EmpiricalRank,
    })
}

/// Known marginal CDF transform: `u_i = F(x_i)`, `v_i = G(y_i)`. The maps
/// must land in (0, 1]; anything else is a contract violation.
pub fn known_cdf_copula<F, G>(s: &SampleSet, f: F, g: G) -> Result<CopulaSet>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let map = |values: &[f64], h: &dyn Fn(f64) -> f64| -> Result<Vec<f64>> {
        values
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let t = h(x);
                if t > 0.0 && t <= 1.0 {
                    Ok(t)
                } else {
                    Err(Error::RangeError { index: i, value: t })
                }
            })
            .collect()
    };
    Ok(CopulaSet {
        u: map(s.x(), &f)?,
        v: map(s.y(), &g)?,
        provenance: Provenance::KnownCdf,
    })
}

/// Cell index of `u` on the dyadic partition of (0, 1] into `2^d` cells:
/// `ceil(u * 2^d) - 1`, so cell `m` covers `(m/2^d, (m+1)/2^d]`. Both the
/// scaling and the interval endpoints are exact in binary64 for `d <= 52`.
pub fn cell_index(u: f64, d: u32) -> u32 {
    let scaled = u * (1u64 << d) as f64;
    let m = scaled.ceil() as i64 - 1;
    m.clamp(0, (1i64 << d) - 1) as u32
}

const WORD_BITS: usize = 64;

/// Word-packed bit columns of one variable: column `k` (1-based, most
/// significant first) holds bit `A_k` of every observation, observation `i`
/// at bit `i % 64` of word `i / 64`. Bits past `n` in the last word are zero
/// so whole-word XOR/popcount kernels need no per-call masking.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    n: usize,
    depth: u32,
    words: usize,
    columns: Vec<Vec<u64>>,
}

impl BitMatrix {
    /// Pack the first `d` expansion bits of unit-interval values.
    pub fn from_unit_values(values: &[f64], d: u32) -> Self {
        let n = values.len();
        let words = n.div_ceil(WORD_BITS).max(1);
        let mut columns = vec![vec![0u64; words]; d as usize];
        for (i, &u) in values.iter().enumerate() {
            let cell = cell_index(u, d);
            for k in 1..=d {
                if (cell >> (d - k)) & 1 == 1 {
                    columns[(k - 1) as usize][i / WORD_BITS] |= 1u64 << (i % WORD_BITS);
                }
            }
        }
        BitMatrix {
            n,
            depth: d,
            words,
            columns,
        }
    }

    /// Pack explicit bit columns (tests and oracles).
    pub fn from_bits(bits: &[Vec<bool>]) -> Self {
        let d = bits.len() as u32;
        let n = bits.first().map_or(0, |c| c.len());
        let words = n.div_ceil(WORD_BITS).max(1);
        let mut columns = vec![vec![0u64; words]; d as usize];
        for (k, col) in bits.iter().enumerate() {
            assert_eq!(col.len(), n, "ragged bit columns");
            for (i, &b) in col.iter().enumerate() {
                if b {
                    columns[k][i / WORD_BITS] |= 1u64 << (i % WORD_BITS);
                }
            }
        }
        BitMatrix {
            n,
            depth: d,
            words,
            columns,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn words(&self) -> usize {
        self.words
    }

    /// Packed column for bit `k` (1-based).
    pub fn column(&self, k: u32) -> &[u64] {
        &self.columns[(k - 1) as usize]
    }

    /// Bit `A_k` of observation `i`.
    pub fn bit(&self, k: u32, i: usize) -> bool {
        (self.column(k)[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    /// Cell index of observation `i` truncated to the first `d` bits
    /// (MSB first); `d` must not exceed the stored depth.
    pub fn cell_of(&self, i: usize, d: u32) -> u32 {
        let mut c = 0u32;
        for k in 1..=d {
            c = (c << 1) | self.bit(k, i) as u32;
        }
        c
    }

    /// Unpack column `k` (tests).
    pub fn unpack(&self, k: u32) -> Vec<bool> {
        (0..self.n).map(|i| self.bit(k, i)).collect()
    }
}

/// Truncate the binary expansion of both coordinates at depth `d`, one bit
/// matrix per variable.
pub fn binary_expand(c: &CopulaSet, d: u32) -> (BitMatrix, BitMatrix) {
    assert!(d >= 1, "depth must be at least 1");
    (
        BitMatrix::from_unit_values(c.u(), d),
        BitMatrix::from_unit_values(c.v(), d),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(x: &[f64], y: &[f64]) -> SampleSet {
        SampleSet::new(x.to_vec(), y.to_vec()).unwrap()
    }

    #[test]
    fn ranks_of_small_sample() {
        let s = samples(&[3.2, 1.1, 2.7], &[0.5, 0.9, 0.1]);
        let c = empirical_copula(&s, TiePolicy::Error).unwrap();
        assert_eq!(c.u(), &[3.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0]);
        assert_eq!(c.v(), &[2.0 / 3.0, 3.0 / 3.0, 1.0 / 3.0]);
        assert_eq!(c.provenance(), Provenance::EmpiricalRank);
    }

    #[test]
    fn identical_ranks_for_monotone_pair() {
        let x: Vec<f64> = (1..=8).map(|i| i as f64).collect();
        let s = samples(&x, &x);
        let c = empirical_copula(&s, TiePolicy::Error).unwrap();
        assert_eq!(c.u(), c.v());
        let expect: Vec<f64> = (1..=8).map(|i| i as f64 / 8.0).collect();
        assert_eq!(c.u(), &expect[..]);
    }

    #[test]
    fn ties_rejected_by_default() {
        let s = samples(&[1.0, 1.0, 2.0], &[0.1, 0.2, 0.3]);
        match empirical_copula(&s, TiePolicy::Error) {
            Err(Error::TiesPresent { variable, .. }) => assert_eq!(variable, "x"),
            other => panic!("expected TiesPresent, got {other:?}"),
        }
    }

    #[test]
    fn random_tie_break_is_deterministic_and_valid() {
        let s = samples(&[1.0, 1.0, 1.0, 2.0], &[4.0, 3.0, 2.0, 1.0]);
        let a = empirical_copula(&s, TiePolicy::Random { seed: 7 }).unwrap();
        let b = empirical_copula(&s, TiePolicy::Random { seed: 7 }).unwrap();
        assert_eq!(a.u(), b.u());
        let mut sorted = a.u().to_vec();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(sorted, vec![0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn known_cdf_identity_and_range() {
        let s = samples(&[0.25, 0.5, 1.0], &[0.1, 0.2, 0.3]);
        let c = known_cdf_copula(&s, |x| x, |y| y).unwrap();
        assert_eq!(c.u(), s.x());
        assert_eq!(c.provenance(), Provenance::KnownCdf);
        let bad = known_cdf_copula(&s, |x| x * 1.2, |y| y);
        assert!(matches!(bad, Err(Error::RangeError { .. })));
        let zero = known_cdf_copula(&s, |x| x - 0.25, |y| y);
        assert!(matches!(zero, Err(Error::RangeError { index: 0, .. })));
    }

    #[test]
    fn cell_index_examples() {
        // 0.3 lies in (1/4, 1/2]: first bit 0, second bit 1.
        assert_eq!(cell_index(0.3, 2), 1);
        assert_eq!(cell_index(1.0, 3), 7);
        // Dyadic boundary resolves to the lower (right-closed) cell.
        assert_eq!(cell_index(0.5, 1), 0);
        assert_eq!(cell_index(0.25, 2), 0);
    }

    #[test]
    fn equal_margin_cells_for_ranks() {
        let x: Vec<f64> = (1..=8).map(|i| i as f64).collect();
        let c = empirical_copula(&samples(&x, &x), TiePolicy::Error).unwrap();
        let (bu, _) = binary_expand(&c, 2);
        let cells: Vec<u32> = (0..8).map(|i| bu.cell_of(i, 2)).collect();
        assert_eq!(cells, vec![0, 0, 1, 1, 2, 2, 3, 3]);
    }

    #[test]
    fn indicator_definition_agrees_with_ceil_rule() {
        // A_1 = I(u in (1/2, 1]); A_k = I(u in the union of right-closed
        // dyadic intervals ((2j-1)/2^k, 2j/2^k]).
        let indicator = |u: f64, k: u32| -> bool {
            (1..=(1u64 << (k - 1)))
                .any(|j| u > (2 * j - 1) as f64 / (1u64 << k) as f64 && u <= (2 * j) as f64 / (1u64 << k) as f64)
        };
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for _ in 0..100_000 {
            let u: f64 = 1.0 - rng.random::<f64>();
            let d = 1 + rng.random_range(0..8) as u32;
            let cell = cell_index(u, d);
            for k in 1..=d {
                let arithmetic = (cell >> (d - k)) & 1 == 1;
                assert_eq!(arithmetic, indicator(u, k), "u = {u}, d = {d}, k = {k}");
            }
        }
    }

    #[test]
    fn truncation_round_trip_error_is_bounded() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        for _ in 0..10_000 {
            let u: f64 = 1.0 - rng.random::<f64>();
            let d = 1 + rng.random_range(0..16) as u32;
            let cell = cell_index(u, d);
            let mut approx = 0.0;
            for k in 1..=d {
                if (cell >> (d - k)) & 1 == 1 {
                    approx += 0.5f64.powi(k as i32);
                }
            }
            let width = 0.5f64.powi(d as i32);
            assert!((u - approx).abs() < 2.0 * width, "u = {u}, d = {d}");
        }
    }

    #[test]
    fn equal_margins_when_cell_count_divides_n() {
        let n = 48; // divisible by 2^4
        let x: Vec<f64> = (1..=n).map(|i| i as f64).collect();
        let c = empirical_copula(&samples(&x, &x), TiePolicy::Error).unwrap();
        for d in 1..=4 {
            let (bu, _) = binary_expand(&c, d);
            let mut counts = vec![0usize; 1 << d];
            for i in 0..n {
                counts[bu.cell_of(i, d) as usize] += 1;
            }
            assert!(counts.iter().all(|&c| c == n / (1 << d)));
        }
    }

    #[test]
    fn tail_word_bits_are_zero() {
        let values: Vec<f64> = (1..=70).map(|i| i as f64 / 70.0).collect();
        let bm = BitMatrix::from_unit_values(&values, 3);
        assert_eq!(bm.words(), 2);
        for k in 1..=3 {
            let last = bm.column(k)[1];
            assert_eq!(last >> (70 - 64), 0, "bits past n must stay zero");
        }
    }
}
