//! Seed derivation shared by every randomized harness.
//!
//! Parallel work items never share a generator: each one derives its own
//! stream from `(base seed, item index)`, so results do not depend on how
//! work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One round of the splitmix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent seed for work item `stream` under `base`.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(base) ^ stream.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream_rng(base: u64, stream: u64) -> ChaCha8Rng {
    rng(derive_seed(base, stream))
}

/// Maps a hash to a real in `[-1, 1]`.
pub(crate) fn unit_symmetric(bits: u64) -> f64 {
    let unit = (bits >> 11) as f64 / (1u64 << 53) as f64;
    2.0 * unit - 1.0
}
