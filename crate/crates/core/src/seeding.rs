//! Deterministic seed derivation for independent RNG streams.
//!
//! Every piece of randomness in this crate flows from a user-supplied `u64`
//! seed through [`derive_seed`] into a ChaCha stream. Derived streams are
//! independent of scheduling, so parallel workers that each derive their own
//! seed produce the same results as a sequential run.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Mixes a base seed with a stream index into a new seed (splitmix64 finalizer).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seeded RNG with a platform-independent stream.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// RNG for the `stream`-th independent sub-task of a seeded computation.
pub fn rng_for_stream(base: u64, stream: u64) -> ChaCha8Rng {
    rng_from_seed(derive_seed(base, stream))
}
