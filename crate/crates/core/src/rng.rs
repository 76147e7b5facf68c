//! Seeded randomness.
//!
//! Every stochastic component in this crate draws from `ChaCha8Rng`, a fixed,
//! platform-independent generator, so a given 64-bit seed reproduces results
//! bit-exactly everywhere.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One SplitMix64 step (Steele, Lea & Flood 2014).
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent stream seed from a master seed and two indices.
///
/// Defined as `splitmix64(splitmix64(splitmix64(master) ^ (a + 1)) ^ (b + 1))`,
/// which keeps the full run grid reproducible from a single master seed
/// without seed files.
pub fn derive_seed(master: u64, a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ a.wrapping_add(1)) ^ b.wrapping_add(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use std::collections::HashSet;

    #[test]
    fn seeded_rng_reproducible() {
        let a: f64 = seeded_rng(7).random();
        let b: f64 = seeded_rng(7).random();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn derived_seeds_distinct() {
        let mut seen = HashSet::new();
        for run in 0..40u64 {
            for k in 0..40u64 {
                assert!(seen.insert(derive_seed(123, run, k)));
            }
        }
    }

    #[test]
    fn splitmix_known_value() {
        // Reference value from the published SplitMix64 test vector chain
        // starting at state 0.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
    }
}
