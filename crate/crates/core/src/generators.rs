//! Seeded samplers: the bisection-expanding-cross fractal, the six standard
//! benchmark scenarios, and the independence null.
//!
//! Every sampler is a pure function of `(parameters, n, seed)`. Parallel
//! harnesses derive independent substreams from a root seed with
//! [`substream`], which feeds a SplitMix64 mix of `(seed, index)` into
//! ChaCha12; workers therefore produce identical draws regardless of
//! scheduling.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::expansion::SampleSet;

/// SplitMix64 finalizer over `(seed, index)`; the documented stream-split
/// rule for all parallel work in this crate.
pub fn substream(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn rng_for(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Uniform draw from the open interval (0, 1): both the value and its
/// complement stay strictly inside, so right-closed binning and identity-CDF
/// transforms never see an endpoint.
fn unit_open(rng: &mut ChaCha12Rng) -> f64 {
    loop {
        let r: f64 = rng.random();
        if r > 0.0 && 1.0 - r < 1.0 {
            return r;
        }
    }
}

/// Standard normal by Box-Muller; two uniforms per draw, fully determined
/// by the generator state.
fn std_normal(rng: &mut ChaCha12Rng) -> f64 {
    let u1 = unit_open(rng);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Level of the bisection expanding cross.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BexLevel(u32);

impl BexLevel {
    pub fn new(d: u32) -> Result<Self> {
        if d >= 1 {
            Ok(BexLevel(d))
        } else {
            Err(Error::Precondition("BEX level must be at least 1".into()))
        }
    }

    pub fn get(&self) -> u32 {
        self.0
    }
}

/// Implicit function whose zero set is the level-`d` cross: over each of the
/// `2^{d-1} x 2^{d-1}` subsquares, the difference of the two coordinate
/// distances to the subsquare centre, gated to that subsquare.
pub fn gamma_d(x: f64, y: f64, d: u32) -> f64 {
    let cells = 1u64 << (d - 1);
    let half = 0.5f64.powi(d as i32);
    let mut total = 0.0;
    for i in 1..=cells {
        let dx = x - i as f64 / cells as f64 + half;
        if dx.abs() > half {
            continue;
        }
        for j in 1..=cells {
            let dy = y - j as f64 / cells as f64 + half;
            if dy.abs() <= half {
                total += dx.abs() - dy.abs();
            }
        }
    }
    total
}

/// Uniform sample on the level-`d` cross: uniform subsquare, fair choice of
/// its main or anti diagonal (equal lengths, so this is uniform on the
/// manifold), uniform position along the chosen diagonal. Coordinates stay
/// in (0, 1). Draw order per point: column, row, diagonal, position.
pub fn sample_bex(level: BexLevel, n: usize, seed: u64) -> SampleSet {
    let d = level.get();
    let cells = 1u64 << (d - 1);
    let width = 1.0 / cells as f64;
    let mut rng = rng_for(seed);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let i = rng.random_range(0..cells) as f64;
        let j = rng.random_range(0..cells) as f64;
        let main_diag = rng.random::<bool>();
        let t = unit_open(&mut rng);
        x.push((i + t) * width);
        y.push((j + if main_diag { t } else { 1.0 - t }) * width);
    }
    SampleSet::new(x, y).expect("sampler produces finite values")
}

/// The six benchmark dependence shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Linear,
    Parabolic,
    Circular,
    Sine,
    Checkerboard,
    Local,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::Linear,
        Scenario::Parabolic,
        Scenario::Circular,
        Scenario::Sine,
        Scenario::Checkerboard,
        Scenario::Local,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Linear => "linear",
            Scenario::Parabolic => "parabolic",
            Scenario::Circular => "circular",
            Scenario::Sine => "sine",
            Scenario::Checkerboard => "checkerboard",
            Scenario::Local => "local",
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .iter()
            .find(|sc| sc.name() == s.to_lowercase())
            .copied()
            .ok_or_else(|| Error::UnknownScenario(s.to_string()))
    }
}

/// A scenario at one of the ten noise levels; the noise standard deviation
/// is `level / 40`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScenarioSpec {
    scenario: Scenario,
    noise_level: u32,
}

impl ScenarioSpec {
    pub fn new(scenario: Scenario, noise_level: u32) -> Result<Self> {
        if (1..=10).contains(&noise_level) {
            Ok(Self {
                scenario,
                noise_level,
            })
        } else {
            Err(Error::Precondition(format!(
                "noise level must be in 1..=10, got {noise_level}"
            )))
        }
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn noise_level(&self) -> u32 {
        self.noise_level
    }

    pub fn noise_sd(&self) -> f64 {
        self.noise_level as f64 / 40.0
    }
}

/// Draw `n` points from the scenario recipe, deterministically in `seed`.
pub fn sample_scenario(spec: &ScenarioSpec, n: usize, seed: u64) -> SampleSet {
    sample_scenario_with_sd(spec.scenario(), spec.noise_sd(), n, &mut rng_for(seed))
}

/// Scenario recipes with an explicit noise standard deviation. Kept
/// separate so the zero-noise limits are testable.
pub(crate) fn sample_scenario_with_sd(
    scenario: Scenario,
    sd: f64,
    n: usize,
    rng: &mut ChaCha12Rng,
) -> SampleSet {
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let (xi, yi) = match scenario {
            Scenario::Linear => {
                let u: f64 = rng.random();
                (u, u + 6.0 * sd * std_normal(rng))
            }
            Scenario::Parabolic => {
                let u: f64 = rng.random();
                (u, (u - 0.5).powi(2) + 1.5 * sd * std_normal(rng))
            }
            Scenario::Circular => {
                let theta = (2.0 * rng.random::<f64>() - 1.0) * std::f64::consts::PI;
                (
                    theta.cos() + 2.5 * sd * std_normal(rng),
                    theta.sin() + 2.5 * sd * std_normal(rng),
                )
            }
            Scenario::Sine => {
                let u: f64 = rng.random();
                (u, (4.0 * std::f64::consts::PI * u).sin() + 8.0 * sd * std_normal(rng))
            }
            Scenario::Checkerboard => {
                let w = rng.random_range(1..=3u32);
                let xi = w as f64 + sd * std_normal(rng);
                let yi = if w == 2 {
                    let v1 = if rng.random::<bool>() { 2.0 } else { 4.0 };
                    v1 + 4.0 * sd * std_normal(rng)
                } else {
                    let v2 = (2 * rng.random_range(0..3u32) + 1) as f64;
                    v2 + 4.0 * sd * std_normal(rng)
                };
                (xi, yi)
            }
            Scenario::Local => {
                let g1 = 0.5 * std_normal(rng);
                let g2 = 0.5 * std_normal(rng);
                let yi = if (0.0..=1.0).contains(&g1) && (0.0..=1.0).contains(&g2) {
                    g1 + sd * std_normal(rng)
                } else {
                    g2
                };
                (g1, yi)
            }
        };
        x.push(xi);
        y.push(yi);
    }
    SampleSet::new(x, y).expect("sampler produces finite values")
}

/// Independent Uniform(0, 1) pairs; the calibration null.
pub fn sample_null(n: usize, seed: u64) -> SampleSet {
    let mut rng = rng_for(seed);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        x.push(unit_open(&mut rng));
        y.push(unit_open(&mut rng));
    }
    SampleSet::new(x, y).expect("finite values")
}
