//! Seed derivation for stage- and document-scoped RNG streams.
//!
//! One top-level seed fans out to independent streams keyed by a label
//! (a stage name, a document id). The derivation is a stable hash, so the
//! same (seed, label) pair yields the same stream on every platform and
//! in every execution order.

/// FNV-1a 64-bit hash over raw bytes.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// SplitMix64 finalizer; decorrelates structured inputs.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a base seed and a label.
pub fn derive_seed(base: u64, label: &str) -> u64 {
    splitmix64(base ^ fnv1a64(label.as_bytes()))
}
