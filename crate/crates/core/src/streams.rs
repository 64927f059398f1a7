//! Seed derivation. Every random stream in the crate is a ChaCha8 generator
//! keyed by a master seed and a path of labels, so any single step, cell or
//! replica can be replayed on its own.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `seed` with an ordered list of labels into a 64-bit stream key.
pub fn derive_seed(seed: u64, labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(splitmix64(seed), |acc, &l| splitmix64(acc ^ splitmix64(l)))
}

pub fn stream(seed: u64, labels: &[u64]) -> Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, labels))
}

/// Stable numeric label for a string (FNV-1a).
pub fn label(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = stream(7, &[1, 2]).gen();
        let b: u64 = stream(7, &[1, 2]).gen();
        let c: u64 = stream(7, &[2, 1]).gen();
        let d: u64 = stream(8, &[1, 2]).gen();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
        assert_ne!(label("survival"), label("network"));
    }
}
