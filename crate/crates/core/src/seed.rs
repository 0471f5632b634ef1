//! Seed-split rule.
//!
//! Every random stream in the crate descends from one 64-bit master seed.
//! A child stream `i` of seed `s` has seed `splitmix64(s ^ splitmix64(i + 1))`;
//! `derive_seed(s, &[i, j])` applies the rule once per path element. The
//! resulting seed keys a ChaCha8 generator. Since a stream depends only on its
//! path, results are independent of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type HlRng = ChaCha8Rng;

/// The SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn child_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream.wrapping_add(1)))
}

pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(seed, |s, &i| child_seed(s, i))
}

pub fn rng_from_seed(seed: u64) -> HlRng {
    ChaCha8Rng::seed_from_u64(seed)
}
