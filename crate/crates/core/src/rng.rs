//! Seeded randomness. Every stochastic routine takes its generator as an
//! argument; there is no global or wall-clock seeded state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent generator for replicate `index` of an experiment seeded with
/// `master`. Replicates share the key and differ in the ChaCha stream id, so
/// the result depends only on `(master, index)` and never on scheduling.
pub fn replicate_rng(master: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}
