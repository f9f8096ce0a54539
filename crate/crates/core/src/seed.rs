//! Seed derivation for independent, reproducible random streams.
//!
//! Every stream is a `ChaCha8Rng` seeded from a 64-bit value. Child seeds are
//! derived with the SplitMix64 finalizer applied to
//! `parent + (index + 1) * 0x9E37_79B9_7F4A_7C15`, so stream `i` of a batch
//! depends only on the master seed and `i`, never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Stream tag for initial-condition sampling.
pub const IC_STREAM: u64 = 0x4943;
/// Stream tag for control noise.
pub const NOISE_STREAM: u64 = 0x4E4F;

pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(parent: u64, index: u64) -> u64 {
    splitmix64(parent.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn splitmix_reference_values() {
        // First outputs of the reference SplitMix64 generator seeded with 0.
        assert_eq!(splitmix64(GOLDEN_GAMMA), 0xE220_A839_7B1D_CDAF);
        assert_eq!(splitmix64(GOLDEN_GAMMA.wrapping_mul(2)), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn derived_streams_are_reproducible_and_distinct() {
        let a: u64 = stream(derive_seed(7, 3)).random();
        let b: u64 = stream(derive_seed(7, 3)).random();
        let c: u64 = stream(derive_seed(7, 4)).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(derive_seed(7, IC_STREAM), derive_seed(7, NOISE_STREAM));
    }
}
