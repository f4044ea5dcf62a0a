//! Seed derivation for reproducible, schedule-independent random streams.
//!
//! Every random decision in the crate draws from a `ChaCha8Rng` seeded by
//! [`derive`]-ing a child seed from a master seed and a path of stream ids
//! (generation, offspring index, instance hash, ...). Two runs with the same
//! master seed therefore see identical streams no matter how work is
//! scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags used by the engine and harness so distinct consumers of the
/// same master seed never share a stream.
pub mod tag {
    pub const INIT: u64 = 0x494e_4954;
    pub const IMPROVE_INIT: u64 = 0x494d_5031;
    pub const OFFSPRING: u64 = 0x4f46_4653;
    pub const IMPROVE: u64 = 0x494d_5032;
    pub const INSTANCE: u64 = 0x494e_5354;
    pub const RHO: u64 = 0x5248_4f5f;
    pub const PAIR: u64 = 0x5041_4952;
    pub const SEED_STRATEGY: u64 = 0x5345_4544;
}

/// One SplitMix64 step.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `master` and a path of stream ids.
pub fn derive(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &id| splitmix64(acc ^ splitmix64(id)))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derived_rng(master: u64, path: &[u64]) -> ChaCha8Rng {
    rng(derive(master, path))
}

/// 64-bit FNV-1a; stable across platforms and toolchains, used to turn
/// instance ids and algorithm names into stream ids.
pub fn stable_hash(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}
