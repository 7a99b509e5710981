//! Seeded random streams.
//!
//! Every experiment is driven by a single 64-bit seed. Independent workers
//! get their own stream through [`derive_seed`], so results do not depend
//! on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type ChaRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> ChaRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for stream `index` of `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ index.wrapping_mul(0xD605_BBB5_8C8A_BBE5))
}

pub fn derived_rng(seed: u64, index: u64) -> ChaRng {
    rng_from_seed(derive_seed(seed, index))
}
