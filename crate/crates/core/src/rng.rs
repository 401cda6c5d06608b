//! Seeded random sources shared by dataset synthesis, initialization and shuffling.
//!
//! All randomness flows through [`SeededRng`] (ChaCha8 seeded from a `u64`), so
//! a recorded seed is enough to reproduce any experiment bit for bit.

use rand::distr::{Distribution, Open01};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform draw on the open interval (0, 1).
    pub fn uniform_open(&mut self) -> f64 {
        Open01.sample(&mut self.inner)
    }

    /// Fills `out` with standard normal variates using the Marsaglia polar method.
    ///
    /// Draw order: each accepted pair `(u, v)` of uniforms on (-1, 1) yields two
    /// variates written in order `u * f`, `v * f`. A trailing odd slot consumes a
    /// fresh pair and discards the second variate.
    pub fn fill_standard_normal(&mut self, out: &mut [f64]) {
        let mut i = 0;
        while i < out.len() {
            let (a, b) = self.polar_pair();
            out[i] = a;
            if i + 1 < out.len() {
                out[i + 1] = b;
            }
            i += 2;
        }
    }

    fn polar_pair(&mut self) -> (f64, f64) {
        loop {
            let u = 2.0 * self.uniform_open() - 1.0;
            let v = 2.0 * self.uniform_open() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = libm::sqrt(-2.0 * libm::log(s) / s);
                return (u * f, v * f);
            }
        }
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.inner);
    }
}
