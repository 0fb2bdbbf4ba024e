//! Seeded randomness.
//!
//! Every command takes a single master seed. Sub-seeds are derived with a
//! fixed counter scheme: `derive_seed(master, stream)` mixes the master seed
//! with a stream counter through SplitMix64, so each consumer (fold plan,
//! estimator initialisation, replica `i` of a Monte-Carlo sweep, ...) draws
//! from an independent, reproducible stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Well-known stream ids so that seeds stay stable across releases.
pub mod stream {
    pub const FOLDS: u64 = 1;
    pub const ESTIMATOR: u64 = 2;
    pub const DATA: u64 = 3;
    pub const FRAME: u64 = 4;
    pub const REPLICA_BASE: u64 = 1 << 32;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(master) ^ stream.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn replica_seed(master: u64, replica: u64) -> u64 {
    derive_seed(master, stream::REPLICA_BASE + replica)
}
