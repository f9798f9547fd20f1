//! Seeded random streams.
//!
//! Every stochastic routine takes an explicit seed. Independent work items
//! (programs, replicate runs, Monte-Carlo workers) draw from separate ChaCha
//! streams of the same master seed so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// The master stream for `seed`.
pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream `stream` of the master seed `seed`.
pub fn substream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
