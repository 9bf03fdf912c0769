//! Seeded randomness helpers. Every stochastic routine in this crate derives
//! its stream from an explicit `u64` seed so that runs replay bit-exactly.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic RNG from a seed; the only generator used in this crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent child seed from `(master, stream, index)`.
///
/// Used to fan work out (heatmap cells, waypoints, meta tasks) while keeping
/// results independent of scheduling order.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ stream.wrapping_mul(0xA076_1D64_78BD_642F)).wrapping_add(index))
}

/// One standard-normal pair via Box-Muller.
pub fn standard_normal_pair(rng: &mut impl Rng) -> (f64, f64) {
    // 1 - u keeps the argument of ln strictly positive.
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    let t = std::f64::consts::TAU * u2;
    (r * t.cos(), r * t.sin())
}

/// Circularly symmetric complex Gaussian sample with total variance `variance`.
pub fn complex_gaussian(rng: &mut impl Rng, variance: f64) -> Complex64 {
    let (a, b) = standard_normal_pair(rng);
    let s = (variance * 0.5).sqrt();
    Complex64::new(s * a, s * b)
}
