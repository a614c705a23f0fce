//! Seeding conventions.
//!
//! Every random stream is a `ChaCha8Rng` (portable, platform-independent
//! output) seeded from a 64-bit value. Independent streams are derived from a
//! master seed and a list of labels (stream purpose, dimension, replication
//! index, ...) by SplitMix64 mixing, so that replication `r` at dimension `d`
//! always sees the same numbers regardless of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream labels used by the experiment harness.
pub mod stream {
    pub const MODEL: u64 = 0x4d4f_4445_4c00_0001;
    pub const PATH: u64 = 0x5041_5448_0000_0002;
    pub const CONE: u64 = 0x434f_4e45_0000_0003;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `master` and an ordered list of labels.
pub fn derive_seed(master: u64, labels: &[u64]) -> u64 {
    labels.iter().fold(splitmix64(master), |acc, &l| splitmix64(acc ^ splitmix64(l)))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
