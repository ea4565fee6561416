//! Seeded random sources.
//!
//! Everything random in this crate flows through ChaCha8 streams seeded with
//! explicit 64-bit values, with uniform and Gaussian draws derived here from
//! raw `next_u64` output. The Box–Muller transform below is part of the
//! crate's determinism contract: the same seed produces the same scalars on
//! every platform and release.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Deterministic stream of standard-normal and uniform draws.
pub(crate) struct SeededSource {
    rng: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl SeededSource {
    pub(crate) fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare_normal: None,
        }
    }

    /// Raw word, used to derive independent sub-seeds.
    #[inline]
    pub(crate) fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw in `[0, 1)` from the top 53 bits of one `u64`.
    #[inline]
    pub(crate) fn uniform01(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `(0, 1]`, safe as a logarithm argument.
    #[inline]
    fn uniform01_open_low(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw via the Box–Muller transform, consuming two
    /// uniforms per pair and caching the second member.
    pub(crate) fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let r = (-2.0 * self.uniform01_open_low().ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * self.uniform01();
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Uniform integer in `[0, bound)` by rejection on the top bits.
    pub(crate) fn uniform_index(&mut self, bound: usize) -> usize {
        debug_assert!(bound > 0);
        let bound = bound as u64;
        let zone = u64::MAX - u64::MAX % bound;
        loop {
            let x = self.rng.next_u64();
            if x < zone {
                return (x % bound) as usize;
            }
        }
    }

    /// Fair coin.
    pub(crate) fn bit(&mut self) -> u8 {
        (self.rng.next_u64() & 1) as u8
    }

    /// Uniform point in the radius-`r` ball in dimension `d`: a Gaussian
    /// direction scaled by `r · u^{1/d}`.
    pub(crate) fn uniform_in_ball(&mut self, d: usize, radius: f64) -> Vec<f64> {
        let mut v: Vec<f64> = (0..d).map(|_| self.standard_normal()).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = if norm == 0.0 {
            0.0
        } else {
            radius * self.uniform01().powf(1.0 / d as f64) / norm
        };
        for x in &mut v {
            *x *= scale;
        }
        v
    }
}
