//! Platform-stable seed derivation.
//!
//! Every random draw in the crate goes through a ChaCha stream whose key is
//! derived here with SplitMix64 mixing, so results depend only on the seed and
//! the inputs, never on hash-map ordering or pointer width.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One SplitMix64 output step.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combine a seed with a value into a new, well-mixed seed.
#[inline]
pub fn mix(seed: u64, value: u64) -> u64 {
    splitmix64(seed ^ splitmix64(value))
}

/// Stream tags. Distinct tags give independent streams from one trial seed.
pub mod tag {
    pub const PROPOSER: u64 = 0x5052_4f50;
    pub const PREDICTOR: u64 = 0x5052_4544;
    pub const RANDOM_POINT: u64 = 0x524e_4450;
}

/// Order-sensitive digest of a set of pixel indices.
pub fn hash_indices(indices: &[usize]) -> u64 {
    indices
        .iter()
        .fold(splitmix64(indices.len() as u64), |acc, &i| mix(acc, i as u64))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform pick from `candidates`, keyed by the seed and the candidate set.
pub fn pick<T: Copy>(seed: u64, candidates: &[T], key: u64) -> Option<T> {
    use rand::Rng;
    if candidates.is_empty() {
        return None;
    }
    let mut r = rng(mix(seed, key));
    let i = r.random_range(0..candidates.len() as u64) as usize;
    Some(candidates[i])
}
