//! Deterministic seed derivation. Every parallel unit of work (bootstrap
//! replicate, Monte Carlo draw, experiment cell) gets its own RNG seeded from
//! `(base seed, path of indices)`, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `seed` with each element of `path` in turn.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng_for(seed: u64, path: &[u64]) -> Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, path))
}

/// Stream tags so that different consumers of one base seed never collide.
pub mod stream {
    pub const PRECISION: u64 = 1;
    pub const DATASET: u64 = 2;
    pub const BOOTSTRAP: u64 = 3;
    pub const CV_SHUFFLE: u64 = 4;
    pub const ORACLE: u64 = 5;
    pub const LIMIT_LAW: u64 = 6;
}
