//! Deterministic seed derivation for independent random streams, and
//! content fingerprints for files that must match each other.

use std::hash::Hasher;

use fnv::FnvHasher;

/// One round of the SplitMix64 output function.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the stream identified by `path` under `base`, e.g.
/// `(seed, [i, j])` for a Gram entry or `(seed, [step, eval, index])`.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix(base), |acc, &p| splitmix(acc ^ splitmix(p)))
}

/// 64-bit FNV-1a of `bytes`.
pub fn fingerprint(bytes: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(bytes);
    h.finish()
}
