//! Seed derivation for reproducible, order-independent random streams.
//!
//! Every replicate and simulation owns a generator seeded from
//! `(master, domain, index)`. Streams never depend on scheduling, so results
//! are identical for any worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const DOMAIN_STEP: u64 = 0xD1B5_4A32_D192_ED03;

/// SplitMix64 finalizer; a bijection on `u64`.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of stream `index` within `domain`.
///
/// For a fixed `(master, domain)` the map `index -> seed` is injective:
/// the pre-image `master' + index * GOLDEN` is distinct for every index below
/// 2^64 because `GOLDEN` is odd, and `mix64` is a bijection.
pub fn derive(master: u64, domain: u64, index: u64) -> u64 {
    let base = mix64(master ^ domain.wrapping_mul(DOMAIN_STEP));
    mix64(base.wrapping_add(index.wrapping_mul(GOLDEN)))
}

pub fn rng(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream domains used across the crate.
pub mod domain {
    pub const INIT: u64 = 1;
    pub const SHUFFLE: u64 = 2;
    pub const OBSERVED: u64 = 3;
    pub const ASSOC_REPLICATE: u64 = 4;
    pub const NONLIN_REPLICATE: u64 = 5;
    pub const PERMUTATION: u64 = 6;
    pub const SIMULATION: u64 = 7;
    pub const SIM_TEST: u64 = 8;
    pub const HOLDOUT: u64 = 9;
}
