//! Seedable randomness with independent child streams.
//!
//! Everything randomized in this crate draws from a [`RandomSource`], so a
//! fixed seed reproduces results exactly, on any platform and for any worker
//! count. Repeated or parallel experiments derive child streams by tag
//! instead of sharing one generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream derived from the same seed; children with distinct
    /// tags never overlap each other or their parent.
    pub fn child(&self, tag: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(tag.wrapping_add(1)); // parent keeps stream 0
        Self {
            seed: self.seed,
            rng,
        }
    }

    /// `count` distinct indices drawn uniformly from `0..universe`.
    pub fn sample_indices(&mut self, universe: usize, count: usize) -> Vec<usize> {
        assert!(count <= universe, "cannot sample {count} of {universe}");
        rand::seq::index::sample(&mut self.rng, universe, count).into_vec()
    }

    pub fn usize_below(&mut self, bound: usize) -> usize {
        self.rng.random_range(0..bound)
    }

    pub fn f64_unit(&mut self) -> f64 {
        self.rng.random_range(0.0..1.0)
    }
}
