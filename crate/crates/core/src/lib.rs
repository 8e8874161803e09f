//! Bitwise binary expansion testing (BET) for nonparametric dependence
//! detection between two continuous variables.
//!
//! The pipeline: transform paired samples to copula values (known CDFs or
//! empirical ranks), truncate the binary expansion of each coordinate at
//! depth `d` into packed bit columns, and test the symmetry of every cross
//! interaction of the resulting Bernoulli bits. Symmetry statistics are
//! computed either directly (XOR + popcount over words) or for all
//! interactions at once through a fast Walsh-Hadamard transform of the
//! contingency-table counts; the two routes agree exactly. Exact binomial
//! and hypergeometric tails, a Fisher 2x2 path for unequal margins, and a
//! normal approximation drive the Max BET and its two-stage depth search
//! with family-wise error control. Generators for a fractal stress
//! distribution and the standard benchmark scenarios, a Monte-Carlo power
//! harness, and an all-pairs screening engine round out the crate.

pub mod error;
pub mod expansion;
pub mod generators;
pub mod inference;
pub mod interactions;
pub mod io;
pub mod plot;
pub mod power;
pub mod screen;

pub use error::{Error, Result};
pub use expansion::{
    binary_expand, cell_index, empirical_copula, known_cdf_copula, BitMatrix, CopulaSet,
    Provenance, SampleSet, TiePolicy,
};
pub use generators::{
    gamma_d, sample_bex, sample_null, sample_scenario, substream, BexLevel, Scenario,
    ScenarioSpec,
};
pub use inference::{
    binomial_pvalue, chisq_test, fisher_2x2_pvalue, hypergeom_pvalue, max_bet,
    normal_approx_pvalue, two_stage_bet, BetResult, ChisqResult, Depths, PvalueMethod,
    SymmetryTestResult, TestMethod,
};
pub use interactions::{
    contingency, enumerate_cross, fwht, iors, symmetry_direct, symmetry_from_table,
    ContingencyTable, InteractionIndex, InteractionKind, IorVector, SymmetryStats,
};
pub use plot::{emit_region_plot, region_plot_svg};
pub use power::{power_curve, DataGenerator, PowerMethod, PowerRow};
pub use screen::{screen_all_pairs, ScreenConfig, ScreenPair, ScreenReport, ScreenTies};
