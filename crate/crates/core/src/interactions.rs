//! Binary interactions, symmetry statistics and interaction odds ratios.
//!
//! Cells and interactions share one packed index: the bit layout is
//! `a_1 .. a_d1 b_1 .. b_d2` with `a_1` most significant. Writing `m` for a
//! packed interaction and `x` for a packed cell, the sign of the interaction
//! on that cell is `(-1)^{popcount(m)} * (-1)^{popcount(m & x)}`, so the
//! whole vector of symmetry statistics is a signed Walsh-Hadamard transform
//! of the cell counts, and a single statistic is an XOR-fold plus popcount
//! over the packed bit columns.

use std::ops::{Add, Sub};

use crate::error::{Error, Result};
use crate::expansion::BitMatrix;

/// One interaction, identified by the subset of bits it multiplies from each
/// variable. `a = 0` with `b = 0` is the trivial index; exactly one of them
/// zero is a marginal interaction; both nonzero is a cross interaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct InteractionIndex {
    d1: u32,
    d2: u32,
    a: u32,
    b: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InteractionKind {
    Trivial,
    Marginal,
    Cross,
}

impl InteractionIndex {
    pub fn new(d1: u32, d2: u32, a: u32, b: u32) -> Self {
        assert!(a < (1 << d1) && b < (1 << d2), "mask out of range");
        Self { d1, d2, a, b }
    }

    pub fn from_packed(d1: u32, d2: u32, m: u32) -> Self {
        assert!(m < (1 << (d1 + d2)), "packed index out of range");
        Self {
            d1,
            d2,
            a: m >> d2,
            b: m & ((1 << d2) - 1),
        }
    }

    /// Packed form `(a_1 .. a_d1 b_1 .. b_d2)`, `a_1` most significant.
    pub fn packed(&self) -> u32 {
        (self.a << self.d2) | self.b
    }

    pub fn depths(&self) -> (u32, u32) {
        (self.d1, self.d2)
    }

    /// Mask over the first variable's bits; bit `d1 - k` answers for `A_k`.
    pub fn a_mask(&self) -> u32 {
        self.a
    }

    pub fn b_mask(&self) -> u32 {
        self.b
    }

    pub fn kind(&self) -> InteractionKind {
        match (self.a, self.b) {
            (0, 0) => InteractionKind::Trivial,
            (0, _) | (_, 0) => InteractionKind::Marginal,
            _ => InteractionKind::Cross,
        }
    }

    pub fn is_cross(&self) -> bool {
        self.kind() == InteractionKind::Cross
    }

    /// Number of bits multiplied together.
    pub fn order(&self) -> u32 {
        self.a.count_ones() + self.b.count_ones()
    }

    /// Human-readable product, e.g. `A1A2B1`; the trivial index is `1`.
    pub fn label(&self) -> String {
        let mut s = String::new();
        for k in 1..=self.d1 {
            if (self.a >> (self.d1 - k)) & 1 == 1 {
                s.push('A');
                s.push_str(&k.to_string());
            }
        }
        for k in 1..=self.d2 {
            if (self.b >> (self.d2 - k)) & 1 == 1 {
                s.push('B');
                s.push_str(&k.to_string());
            }
        }
        if s.is_empty() {
            s.push('1');
        }
        s
    }

    /// Parse a label such as `A1A2B1` back into an index at the given depths.
    pub fn from_label(d1: u32, d2: u32, label: &str) -> Result<Self> {
        let bad = || Error::BadInteractionLabel {
            label: label.to_string(),
            d1,
            d2,
        };
        let mut a = 0u32;
        let mut b = 0u32;
        let bytes = label.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let var = bytes[i] as char;
            i += 1;
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let k: u32 = label[start..i].parse().map_err(|_| bad())?;
            match var {
                'A' | 'a' if k >= 1 && k <= d1 => a |= 1 << (d1 - k),
                'B' | 'b' if k >= 1 && k <= d2 => b |= 1 << (d2 - k),
                _ => return Err(bad()),
            }
        }
        if a == 0 && b == 0 {
            return Err(bad());
        }
        Ok(Self { d1, d2, a, b })
    }
}

/// All `(2^d1 - 1)(2^d2 - 1)` cross interactions in ascending packed order.
pub fn enumerate_cross(d1: u32, d2: u32) -> Vec<InteractionIndex> {
    assert!(d1 >= 1 && d2 >= 1);
    let mut out = Vec::with_capacity(((1usize << d1) - 1) * ((1usize << d2) - 1));
    for m in 1..(1u32 << (d1 + d2)) {
        let idx = InteractionIndex::from_packed(d1, d2, m);
        if idx.is_cross() {
            out.push(idx);
        }
    }
    out
}

/// Symmetry statistic of one interaction straight from the packed bits:
/// XOR-fold the selected columns, popcount, and apply the parity sign.
pub fn symmetry_direct(u: &BitMatrix, v: &BitMatrix, idx: &InteractionIndex) -> Result<i64> {
    if u.n() != v.n() {
        return Err(Error::LengthMismatch {
            left: u.n(),
            right: v.n(),
        });
    }
    let (d1, d2) = idx.depths();
    if d1 > u.depth() {
        return Err(Error::DepthMismatch {
            variable: "u".into(),
            requested: d1,
            available: u.depth(),
        });
    }
    if d2 > v.depth() {
        return Err(Error::DepthMismatch {
            variable: "v".into(),
            requested: d2,
            available: v.depth(),
        });
    }
    let words = u.words().max(v.words());
    let mut acc = vec![0u64; words];
    for k in 1..=d1 {
        if (idx.a_mask() >> (d1 - k)) & 1 == 1 {
            for (w, &c) in acc.iter_mut().zip(u.column(k)) {
                *w ^= c;
            }
        }
    }
    for k in 1..=d2 {
        if (idx.b_mask() >> (d2 - k)) & 1 == 1 {
            for (w, &c) in acc.iter_mut().zip(v.column(k)) {
                *w ^= c;
            }
        }
    }
    let ones: i64 = acc.iter().map(|w| w.count_ones() as i64).sum();
    let s = u.n() as i64 - 2 * ones;
    Ok(if idx.packed().count_ones() % 2 == 1 { -s } else { s })
}

/// Cell counts of the `2^d1 x 2^d2` partition, indexed by packed cell bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    d1: u32,
    d2: u32,
    n: u64,
    counts: Vec<u64>,
}

impl ContingencyTable {
    pub fn new(d1: u32, d2: u32, counts: Vec<u64>) -> Self {
        assert_eq!(counts.len(), 1 << (d1 + d2));
        let n = counts.iter().sum();
        Self { d1, d2, n, counts }
    }

    pub fn depths(&self) -> (u32, u32) {
        (self.d1, self.d2)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Total count of u-cell `i` (summing over v-cells).
    pub fn u_margin(&self, i: u32) -> u64 {
        (0..1u32 << self.d2)
            .map(|j| self.counts[((i << self.d2) | j) as usize])
            .sum()
    }

    /// Total count of v-cell `j`.
    pub fn v_margin(&self, j: u32) -> u64 {
        (0..1u32 << self.d1)
            .map(|i| self.counts[((i << self.d2) | j) as usize])
            .sum()
    }
}

/// Bin the observations of two bit matrices into a contingency table at
/// depths `(d1, d2)`; the matrices may hold more bits than requested.
pub fn contingency(u: &BitMatrix, v: &BitMatrix, d1: u32, d2: u32) -> Result<ContingencyTable> {
    if u.n() != v.n() {
        return Err(Error::LengthMismatch {
            left: u.n(),
            right: v.n(),
        });
    }
    if d1 > u.depth() {
        return Err(Error::DepthMismatch {
            variable: "u".into(),
            requested: d1,
            available: u.depth(),
        });
    }
    if d2 > v.depth() {
        return Err(Error::DepthMismatch {
            variable: "v".into(),
            requested: d2,
            available: v.depth(),
        });
    }
    let mut counts = vec![0u64; 1 << (d1 + d2)];
    for i in 0..u.n() {
        let cell = (u.cell_of(i, d1) << d2) | v.cell_of(i, d2);
        counts[cell as usize] += 1;
    }
    Ok(ContingencyTable {
        d1,
        d2,
        n: u.n() as u64,
        counts,
    })
}

/// In-place fast Walsh-Hadamard transform (Sylvester ordering):
/// `out[m] = sum_x (-1)^{popcount(m & x)} v[x]`. Integer input gives exact
/// integer output; no normalization is applied.
pub fn fwht<T>(v: &mut [T]) -> Result<()>
where
    T: Copy + Add<Output = T> + Sub<Output = T>,
{
    let n = v.len();
    if n == 0 || n & (n - 1) != 0 {
        return Err(Error::LengthNotPowerOfTwo(n));
    }
    let mut h = 1;
    while h < n {
        for block in v.chunks_mut(2 * h) {
            for i in 0..h {
                let (x, y) = (block[i], block[i + h]);
                block[i] = x + y;
                block[i + h] = x - y;
            }
        }
        h *= 2;
    }
    Ok(())
}

/// The full vector of symmetry statistics, indexed by packed interaction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetryStats {
    d1: u32,
    d2: u32,
    n: u64,
    values: Vec<i64>,
}

impl SymmetryStats {
    pub fn depths(&self) -> (u32, u32) {
        (self.d1, self.d2)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn at_packed(&self, m: u32) -> i64 {
        self.values[m as usize]
    }

    pub fn value(&self, idx: &InteractionIndex) -> i64 {
        debug_assert_eq!(idx.depths(), (self.d1, self.d2));
        self.values[idx.packed() as usize]
    }
}

/// Sample BID equation: all `2^{d1+d2}` symmetry statistics from the cell
/// counts in one transform, `S[m] = (-1)^{popcount(m)} * fwht(N)[m]`.
pub fn symmetry_from_table(t: &ContingencyTable) -> SymmetryStats {
    let mut values: Vec<i64> = t.counts().iter().map(|&c| c as i64).collect();
    fwht(&mut values).expect("table length is a power of two");
    for (m, v) in values.iter_mut().enumerate() {
        if (m as u32).count_ones() % 2 == 1 {
            *v = -*v;
        }
    }
    SymmetryStats {
        d1: t.d1,
        d2: t.d2,
        n: t.n,
        values,
    }
}

/// Log interaction odds ratios, indexed by packed interaction. Marginal
/// entries are log-MIORs, cross entries log-CIORs; independence holds if and
/// only if every cross entry is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct IorVector {
    d1: u32,
    d2: u32,
    log_values: Vec<f64>,
}

impl IorVector {
    pub fn depths(&self) -> (u32, u32) {
        (self.d1, self.d2)
    }

    pub fn log_values(&self) -> &[f64] {
        &self.log_values
    }

    pub fn log_at(&self, idx: &InteractionIndex) -> f64 {
        self.log_values[idx.packed() as usize]
    }

    /// Packed indices and log values of the cross entries.
    pub fn cross_entries(&self) -> impl Iterator<Item = (InteractionIndex, f64)> + '_ {
        (0..self.log_values.len() as u32).filter_map(move |m| {
            let idx = InteractionIndex::from_packed(self.d1, self.d2, m);
            idx.is_cross().then(|| (idx, self.log_values[m as usize]))
        })
    }
}

/// Log-BID equation applied to a vector of strictly positive cell
/// probabilities summing to one (tolerance 1e-12):
/// `log lambda[m] = (-1)^{popcount(m)} * fwht(log p)[m]`.
pub fn iors(d1: u32, d2: u32, p: &[f64]) -> Result<IorVector> {
    if p.len() != 1 << (d1 + d2) {
        return Err(Error::LengthNotPowerOfTwo(p.len()));
    }
    let mut sum = 0.0;
    for (i, &q) in p.iter().enumerate() {
        if q.is_nan() || q <= 0.0 {
            return Err(Error::NonPositiveProbability { index: i, value: q });
        }
        sum += q;
    }
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::ProbabilityMass { sum });
    }
    let mut log_values: Vec<f64> = p.iter().map(|&q| q.ln()).collect();
    fwht(&mut log_values).expect("length checked above");
    for (m, v) in log_values.iter_mut().enumerate() {
        if (m as u32).count_ones() % 2 == 1 {
            *v = -*v;
        }
    }
    Ok(IorVector { d1, d2, log_values })
}

/// Sign of interaction `m` on cell `x` under the packed-index convention.
pub fn cell_sign(m: u32, x: u32) -> i64 {
    if (m.count_ones() + (m & x).count_ones()) % 2 == 1 {
        -1
    } else {
        1
    }
}
