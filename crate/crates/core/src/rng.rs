//! Seed derivation. Every random decision in a run draws from a generator
//! seeded by `(base seed, purpose, task, ...)`, so a run resumed from a
//! checkpoint replays exactly the same choices as an uninterrupted one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags mixed into derived seeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Split = 1,
    Init = 2,
    Batches = 3,
    Fisher = 4,
    Replay = 5,
    Eviction = 6,
    Permutation = 7,
    Synthetic = 8,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(base: u64, stream: Stream, parts: &[u64]) -> u64 {
    let mut h = splitmix64(base ^ splitmix64(stream as u64));
    for &p in parts {
        h = splitmix64(h ^ p);
    }
    h
}

pub fn rng_for(base: u64, stream: Stream, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, stream, parts))
}
