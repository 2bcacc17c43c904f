//! Seed derivation for work items that must not depend on scheduling.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a path of identifiers (master seed, stage, partition, ...) into a
/// single seed with splitmix64 finalization after every component.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(GOLDEN, |acc, &p| mix(acc.wrapping_add(GOLDEN) ^ mix(p.wrapping_add(GOLDEN))))
}
