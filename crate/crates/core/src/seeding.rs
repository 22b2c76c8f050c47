//! Seed derivation. Every random consumer gets its own ChaCha stream keyed by
//! a base seed, so results do not depend on evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids used by the training harness.
pub mod stream {
    pub const INIT: u64 = 1;
    pub const MASK: u64 = 2;
    pub const TRAIN_DATA: u64 = 3;
    pub const TEST_DATA: u64 = 4;
}

/// A ChaCha8 generator on stream `stream` of `seed`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer; turns `(seed, salt)` into a well-mixed child seed.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
