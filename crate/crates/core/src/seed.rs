//! Seed derivation.
//!
//! Each pipeline stage gets its own seed from the global one:
//! `stage_seed = splitmix64(global ^ fnv1a64(stage_name))`. Stages therefore
//! stay reproducible on their own, and adding a stage never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a64(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

pub fn stage_seed(global: u64, stage: &str) -> u64 {
    splitmix64(global ^ fnv1a64(stage))
}

/// The toolkit's RNG: ChaCha8, which is stable across platforms and releases.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
