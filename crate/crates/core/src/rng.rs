//! Seeded random streams and the seed-derivation scheme.
//!
//! Every stochastic stage of the pipeline draws from a [`ChaCha8Rng`] whose
//! seed is derived from the experiment master seed, a stage name and an
//! index. The derivation is a plain hash, so any stage can be recomputed in
//! isolation and runs are auditable: `seed = derive_seed(master, stage, i)`.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The stream type used throughout the crate.
pub type Stream = ChaCha8Rng;

/// Creates the seeded stream for one stage instance.
pub fn stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives a stage seed from a master seed, stage name and index.
///
/// FNV-1a over the stage name, then two splitmix64 finalization rounds to
/// mix in master seed and index. Stable across platforms and releases.
pub fn derive_seed(master: u64, stage: &str, index: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in stage.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix(splitmix(h ^ master) ^ index)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over raw bytes; used for config and architecture digests.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
