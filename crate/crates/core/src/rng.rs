//! Deterministic seed derivation.
//!
//! Every random decision in the library is driven by a seed derived from a
//! master seed and a fixed list of context values (purpose tag, instance
//! index, trial index, ...). Adding a new consumer of randomness therefore
//! never perturbs the streams of existing ones.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags mixed into derived seeds so different uses of the same
/// (instance, trial) pair get independent streams.
pub mod purpose {
    pub const GRAPH: u64 = 0x01;
    pub const SOURCE: u64 = 0x02;
    pub const DELAYS: u64 = 0x03;
    pub const RUN: u64 = 0x04;
}

/// SplitMix64 output function; full-period mixer over u64.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `master` and an ordered list of context values.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    let mut state = splitmix64(master);
    for &part in parts {
        state = splitmix64(state ^ part);
    }
    state
}

/// A seeded stream for one derived context.
pub fn seeded_rng(master: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, parts))
}
