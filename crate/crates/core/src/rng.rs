//! Seeding. Every stochastic routine takes a `u64` seed and runs a
//! `ChaCha8Rng` stream seeded from it; replication `r` of a run seeded with
//! `s` uses `derive_seed(s, r)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator behind every simulation and sampler in this crate.
pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for stream `index` under master seed `seed`. Stable across releases.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}
