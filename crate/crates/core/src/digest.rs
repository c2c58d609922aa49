//! Stable 64-bit hashing used for state digests and seed derivation.

use std::hash::Hasher;

use fnv::FnvHasher;
use serde::Serialize;

/// FNV-1a over raw bytes. Stable across platforms and releases.
pub fn stable_hash(bytes: &[u8]) -> u64 {
    let mut hasher = FnvHasher::default();
    hasher.write(bytes);
    hasher.finish()
}

/// Digest of a value's canonical JSON serialization.
pub fn digest_of<T: Serialize>(value: &T) -> u64 {
    let bytes = serde_json::to_vec(value).expect("state types always serialize");
    stable_hash(&bytes)
}

/// Derives a child seed from a parent seed and a label, independent of call order.
pub fn derive_seed(parent: u64, label: &str) -> u64 {
    let mut hasher = FnvHasher::default();
    hasher.write(&parent.to_le_bytes());
    hasher.write(label.as_bytes());
    hasher.finish()
}
