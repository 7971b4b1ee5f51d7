//! Seeded randomness with exactly documented algorithms.
//!
//! Everything random in this crate flows through this module so that results
//! are reproducible bit-for-bit from the seeds alone, and so that another
//! implementation could reproduce them from this documentation:
//!
//! * Uniform streams come from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded via
//!   `seed_from_u64`.
//! * A uniform double in [0, 1) is the top 53 bits of one `next_u64`:
//!   `(x >> 11) as f64 * 2^-53`.
//! * Gaussians use the Box–Muller transform (see [`GaussianSource`]).
//! * Independent per-trial seeds derive from a base seed and indices via
//!   SplitMix64 ([`mix_seed`]), never by sequential stream consumption, so
//!   adding trials or reordering execution cannot change earlier trials.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer: the standard constants from the reference
/// implementation (Steele, Lea, Flood; also used by
/// `java.util.SplittableRandom`).
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent seed from a base seed and a list of indices.
///
/// The mixing rule, applied left to right over `parts`:
/// `state := splitmix64(state XOR (part + 1) * 0x9E3779B97F4A7C15)`,
/// starting from `state = splitmix64(base)`. The `+ 1` keeps index 0 from
/// being a no-op against a zero state.
pub fn mix_seed(base: u64, parts: &[u64]) -> u64 {
    let mut state = splitmix64(base);
    for &part in parts {
        state = splitmix64(state ^ part.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    }
    state
}

/// Seeded source of uniform and Gaussian doubles.
///
/// Gaussians are produced by the Box–Muller transform: with u1 in (0, 1]
/// and u2 in [0, 1) drawn from the uniform stream,
/// `z0 = sqrt(-2 ln u1) * cos(2*pi*u2)` and `z1 = sqrt(-2 ln u1) * sin(2*pi*u2)`;
/// `z1` is cached and returned on the next call. `u1` maps the top 53 bits
/// shifted by one ULP into (0, 1] so the logarithm is always finite.
pub struct GaussianSource {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianSource {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform double in [0, 1): top 53 bits of one u64.
    pub fn next_uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box–Muller.
    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1]: shift the 53-bit integer up by one before scaling.
        let u1 = ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.next_uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }
}
