//! Seeded random streams.
//!
//! Every random quantity in the crate comes from a [`SplitMix64`] generator
//! whose 64-bit state is the user seed itself, so instances are reproducible
//! across platforms. Independent streams derived from one seed are separated
//! by XOR-ing a fixed stream tag into the state.

use rand::Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;
pub use rand_xoshiro::SplitMix64;

/// Stream tag for the random matrix of `psd-quad` instances.
pub const MATRIX_STREAM: u64 = 0;
/// Stream tag for default starting points.
pub const START_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;
/// Stream tag for diagnostic sampling.
pub const PROBE_STREAM: u64 = 0xD1B5_4A32_D192_ED03;

pub fn stream(seed: u64, tag: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(seed ^ tag)
}

pub fn standard_normal_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Entries uniform on `[lo, hi)`.
pub fn uniform_vec<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// A point drawn uniformly from the Euclidean ball of `radius` around `center`.
pub fn uniform_in_ball<R: Rng>(rng: &mut R, center: &[f64], radius: f64) -> Vec<f64> {
    let n = center.len();
    let dir = standard_normal_vec(rng, n);
    let len = crate::vecops::norm(&dir);
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / n as f64);
    if len == 0.0 {
        return center.to_vec();
    }
    center
        .iter()
        .zip(&dir)
        .map(|(c, d)| c + r * d / len)
        .collect()
}
