//! Deterministic seeded RNG.
//!
//! ChaCha8 is used everywhere: a named, portable generator whose stream is
//! bit-identical for a given seed on every platform. Instances are
//! single-owner; experiment code derives independent per-task seeds with
//! [`mix_seed`] instead of sharing a generator.

use num_complex::Complex64;
use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Seeded deterministic generator (ChaCha8).
#[derive(Debug, Clone)]
pub struct Rng(ChaCha8Rng);

impl Rng {
    pub fn seed_from_u64(seed: u64) -> Self {
        Rng(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Standard normal draw, N(0, 1).
    pub fn standard_normal(&mut self) -> f64 {
        self.0.sample(StandardNormal)
    }

    /// Complex draw with unit total variance: re, im ~ N(0, 1/2).
    pub fn complex_unit_variance(&mut self) -> Complex64 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Complex64::new(self.standard_normal() * s, self.standard_normal() * s)
    }

    /// Complex draw with re, im ~ N(0, 1) (total variance 2).
    pub fn complex_standard_normal(&mut self) -> Complex64 {
        Complex64::new(self.standard_normal(), self.standard_normal())
    }

    /// Uniform draw on [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.0.gen_range(lo..hi)
    }

    /// `k` distinct indices sampled uniformly from `0..n` without replacement.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        rand::seq::index::sample(&mut self.0, n, k).into_vec()
    }

    /// Bernoulli(1/2) draw.
    pub fn coin(&mut self) -> bool {
        self.0.gen::<bool>()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
}

impl RngCore for Rng {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.0.try_fill_bytes(dest)
    }
}

/// SplitMix64 finalizer; full-avalanche 64-bit mixer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a base seed and a path of indices
/// (sweep point, trial, algorithm, stream tag, ...).
///
/// Each path element is mixed through SplitMix64 so nearby paths decorrelate;
/// the derivation is order-sensitive and collision-resistant in practice.
pub fn mix_seed(base: u64, path: &[u64]) -> u64 {
    let mut state = splitmix64(base ^ 0x517C_C1B7_2722_0A95);
    for &p in path {
        state = splitmix64(state ^ splitmix64(p.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    }
    state
}
