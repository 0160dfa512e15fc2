//! Seed derivation and random streams.
//!
//! Every random quantity in the crate comes from a SplitMix64 stream whose
//! starting state is a hash of a master seed and a path of indices (domain, level,
//! player, ...). Streams are therefore independent of evaluation order, which
//! keeps simulations reproducible when run concurrently.

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::SplitMix64;

pub type Stream = SplitMix64;

/// Seed domain for ground-truth generation. Fitting never derives from it.
pub const DOMAIN_TRUTH: u64 = 0x7472_7574_6800_0001;
/// Seed domain for synthetic episode logs.
pub const DOMAIN_EPISODES: u64 = 0x6570_6973_6f64_0002;
/// Seed domain for optimizer sampling.
pub const DOMAIN_OPTIMIZER: u64 = 0x6f70_7469_6d00_0003;
/// Seed domain for simulations run during fitting and prediction.
pub const DOMAIN_FIT_SIM: u64 = 0x6669_7473_696d_0004;
/// Seed domain for initial populations.
pub const DOMAIN_POPULATION: u64 = 0x706f_7075_6c00_0005;

const RESAMPLE_TAG: u64 = 0x7265_7361_6d70_6c65;

/// SplitMix64 finalizer.
#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes `seed` together with one more index.
#[inline]
pub fn mix(seed: u64, index: u64) -> u64 {
    splitmix(splitmix(seed) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Hashes a seed with a path of indices.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(seed, |acc, &i| mix(acc, i))
}

#[inline]
pub fn stream(seed: u64, index: u64) -> Stream {
    StreamKey::new(seed).stream(index)
}

/// A seed with its first hash round precomputed, for deriving many indexed
/// streams. `StreamKey::new(s).stream(i)` equals `stream(s, i)`.
#[derive(Debug, Clone, Copy)]
pub struct StreamKey(u64);

impl StreamKey {
    #[inline]
    pub fn new(seed: u64) -> Self {
        StreamKey(splitmix(seed))
    }

    #[inline]
    pub fn stream(&self, index: u64) -> Stream {
        Stream::seed_from_u64(splitmix(self.0 ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93)))
    }
}

/// Stream that picks the survivors replicated after a level.
pub fn resample_stream(level_seed: u64) -> Stream {
    stream(level_seed, RESAMPLE_TAG)
}

/// Draws from N(mean, sigma). A zero sigma returns `mean` exactly.
#[inline]
pub fn normal(rng: &mut Stream, mean: f64, sigma: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    if sigma == 0.0 {
        mean
    } else {
        mean + sigma * z
    }
}
