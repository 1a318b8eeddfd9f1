//! Deterministic seed derivation.
//!
//! Every random stream in the pipeline is keyed by the master seed plus a
//! path of integers (stream tag, signal, feature, K, trial, ...). Results
//! therefore do not depend on execution order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub(crate) const STREAM_CROSSVAL: u64 = 0x4356;
pub(crate) const STREAM_ROBUSTNESS: u64 = 0x5242;
pub(crate) const STREAM_KMEANS: u64 = 0x4b4d;
pub(crate) const STREAM_SYNTH: u64 = 0x5359;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `path` into `master`, one component at a time.
pub fn derive(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &p| {
        splitmix64(acc ^ splitmix64(p))
    })
}

/// Stable 64-bit key for a string identifier (FNV-1a).
pub fn key_of(id: &str) -> u64 {
    id.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

pub fn rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
