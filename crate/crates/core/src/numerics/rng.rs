//! Seeded random streams.
//!
//! A [`SeedStream`] names one ChaCha8 keystream: the master seed selects the
//! key and the stream index selects the ChaCha stream counter. Monte Carlo
//! drivers hand out one stream per fixed-size chunk of samples, so results
//! depend only on `(seed, chunk size)` and never on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Identifier of an independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedStream {
    pub seed: u64,
    pub index: u64,
}

impl SeedStream {
    pub fn new(seed: u64, index: u64) -> Self {
        Self { seed, index }
    }

    /// Returns a generator positioned at the start of this stream.
    pub fn rng(&self) -> StreamRng {
        let mut inner = ChaCha8Rng::seed_from_u64(self.seed);
        inner.set_stream(self.index);
        StreamRng { inner }
    }
}

/// Generator state for one stream.
#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha8Rng,
}

impl StreamRng {
    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform draw on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }
}

/// Standard normal draw from `rng`.
pub fn rng_normal(rng: &mut StreamRng) -> f64 {
    rng.normal()
}
