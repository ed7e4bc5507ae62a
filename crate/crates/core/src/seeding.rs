//! Counter-based seed derivation.
//!
//! Every random stream in an experiment is keyed by a tuple such as
//! `(master_seed, run, role)` or `(seed, iteration, role, agent)`. Streams
//! never depend on scheduling order, so parallel evaluation reproduces the
//! sequential results exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type StreamRng = ChaCha8Rng;

/// Stream roles. Kept as plain constants so tests can rebuild any stream.
pub mod role {
    pub const PROPOSE: u64 = 1;
    pub const EVALUATE: u64 = 2;
    pub const ACCEPT: u64 = 3;
    pub const HISTORY: u64 = 4;
    pub const DATA: u64 = 10;
    pub const OPTIMIZER: u64 = 11;
    pub const PSEUDO_LIKELIHOOD: u64 = 12;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a 64-bit seed from a base seed and a tuple of tags.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(splitmix64(seed), |acc, &t| {
        splitmix64(acc ^ splitmix64(t.wrapping_add(0x632B_E59B_D9B4_E019)))
    })
}

/// A fresh generator for the stream keyed by `(seed, tags...)`.
pub fn stream_rng(seed: u64, tags: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tags))
}

/// A generator seeded directly from a single value.
pub fn rng_from_seed(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}
