//! Seeded pseudo-random generation.
//!
//! All randomness in the crate comes from xoshiro256++ seeded through SplitMix64
//! expansion of a single `u64`. Both algorithms are fully specified and platform
//! independent, which is what makes splits, resampling and weight initialization
//! reproducible.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type Rng = Xoshiro256PlusPlus;

pub fn seeded(seed: u64) -> Rng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Fisher-Yates shuffle driven by `rng`.
///
/// Written out rather than taken from `rand` so the permutation for a given seed
/// does not depend on the sampling internals of a particular `rand` release.
pub fn shuffle<T>(items: &mut [T], rng: &mut Rng) {
    for i in (1..items.len()).rev() {
        let j = below(rng, i as u64 + 1) as usize;
        items.swap(i, j);
    }
}

/// Uniform integer in `0..bound` by rejection sampling. `bound` must be non-zero.
pub fn below(rng: &mut Rng, bound: u64) -> u64 {
    use rand::RngCore;
    debug_assert!(bound > 0);
    let zone = u64::MAX - (u64::MAX % bound);
    loop {
        let x = rng.next_u64();
        if x < zone {
            return x % bound;
        }
    }
}

/// Uniform float in `[0, 1)` with 53 bits of precision.
pub fn unit(rng: &mut Rng) -> f64 {
    use rand::RngCore;
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
