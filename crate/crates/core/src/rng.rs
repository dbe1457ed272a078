//! Deterministic RNG streams.
//!
//! Every random source in an episode is keyed by `(seed, stream)` so that
//! results never depend on scheduling or on how much randomness another
//! component consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream ids used by the episode runner and the strategies it builds.
pub mod streams {
    pub const CONTEXTS: u64 = 1;
    pub const ACTIONS: u64 = 2;
    pub const COSTS: u64 = 3;
    pub const POOL: u64 = 4;
    pub const PLAYOUT_CONTEXTS: u64 = 5;
    pub const PLAYOUT_SIGNS: u64 = 6;
    pub const ORACLE_NOISE: u64 = 7;
    pub const BASELINE: u64 = 8;
}

pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
