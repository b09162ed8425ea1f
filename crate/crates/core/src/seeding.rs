//! Deterministic seed derivation so every random draw in the pipeline is
//! attributable to one explicit base seed plus a named purpose.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// FNV-1a over the base seed and a label, folding in an index.
/// Stable across platforms and releases; not cryptographic.
pub fn derive_seed(base: u64, label: &str, index: u64) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for byte in base
        .to_le_bytes()
        .iter()
        .chain(label.as_bytes())
        .chain(index.to_le_bytes().iter())
    {
        h ^= u64::from(*byte);
        h = h.wrapping_mul(PRIME);
    }
    h
}

/// Seeded stream cipher RNG; the project standard for reproducible draws.
pub fn rng_for(base: u64, label: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, label, index))
}

/// FNV-1a hex digest of arbitrary bytes, used for config and model digests.
pub fn fnv1a_hex(bytes: &[u8]) -> String {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(PRIME);
    }
    format!("{h:016x}")
}
