//! Counter-based random substreams.
//!
//! Every random quantity of a trial draws from its own generator, seeded by
//! mixing the master seed with the trial index, a purpose tag and the ids
//! involved. Draws are therefore independent of evaluation order and of how
//! trials are spread over worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a substream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamTag {
    UePosition = 1,
    TreeField = 2,
    Fading = 3,
    Beam = 4,
    Foliage = 5,
    Synthetic = 6,
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn substream_seed(master: u64, trial: u64, tag: StreamTag, ids: &[u64]) -> u64 {
    let mut h = mix64(master);
    h = mix64(h ^ trial);
    h = mix64(h ^ tag as u64);
    for &id in ids {
        h = mix64(h ^ id);
    }
    h
}

pub fn substream(master: u64, trial: u64, tag: StreamTag, ids: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(substream_seed(master, trial, tag, ids))
}
