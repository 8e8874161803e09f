//! Shared input builders for the kernel benchmarks.

use bet_core::{binary_expand, empirical_copula, BitMatrix, SampleSet, TiePolicy};
use bet_core::{sample_null, sample_scenario, Scenario, ScenarioSpec};

/// Rank-transformed, bit-packed null data at the given size and depth.
pub fn null_bits(n: usize, d: u32, seed: u64) -> (BitMatrix, BitMatrix) {
    let s = sample_null(n, seed);
    let c = empirical_copula(&s, TiePolicy::Error).expect("continuous draws are tie-free");
    binary_expand(&c, d)
}

/// A dependent dataset for end-to-end benchmarks.
pub fn sine_samples(n: usize, seed: u64) -> SampleSet {
    let spec = ScenarioSpec::new(Scenario::Sine, 2).expect("valid level");
    sample_scenario(&spec, n, seed)
}
