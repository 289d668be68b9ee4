//! Stable derivation of per-purpose RNG stream seeds.
//!
//! Every random draw in the library flows through a ChaCha8 stream whose
//! seed is mixed from the user seed plus stable context words (purpose tag,
//! fold id, query index, attribute bits). Streams are therefore independent
//! of execution order and thread count, and identical across platforms.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::AttributeVector;

/// Purpose tags keep unrelated streams disjoint even under equal seeds.
pub(crate) const PURPOSE_FOLDS: u64 = 1;
pub(crate) const PURPOSE_BUILD_PRUNE_SPLIT: u64 = 2;
pub(crate) const PURPOSE_GENERATE: u64 = 3;
pub(crate) const PURPOSE_BASELINE: u64 = 4;
pub(crate) const PURPOSE_SYNTH: u64 = 5;
pub(crate) const PURPOSE_SCALING: u64 = 6;

// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix a user seed with context words into one stream seed.
pub(crate) fn derive(seed: u64, words: &[u64]) -> u64 {
    let mut h = mix(seed);
    for &w in words {
        h = mix(h ^ w);
    }
    h
}

/// Stream seed for one query: (seed, stable hash of the attribute vector,
/// query index). Reordering queries cannot change any query's draws.
pub(crate) fn derive_query(seed: u64, query: &AttributeVector, query_index: u64) -> u64 {
    let mut h = mix(seed ^ PURPOSE_GENERATE);
    h = mix(h ^ query_index);
    for v in query.values() {
        h = mix(h ^ v.to_bits());
    }
    h
}

pub(crate) fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
