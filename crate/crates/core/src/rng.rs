//! Independent random streams derived from one scenario seed.
//!
//! Planning, obstacle motion and replanning each draw from their own ChaCha
//! stream, so adding a replan never perturbs how obstacles move.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Streams {
    seed: u64,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Streams { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn stream(&self, id: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(id);
        rng
    }

    pub fn planning(&self) -> ChaCha8Rng {
        self.stream(1)
    }

    pub fn obstacles(&self) -> ChaCha8Rng {
        self.stream(2)
    }

    pub fn replanning(&self) -> ChaCha8Rng {
        self.stream(3)
    }
}
