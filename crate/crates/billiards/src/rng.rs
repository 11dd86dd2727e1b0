//! Deterministic random-number streams.
//!
//! Every randomized routine in the crate draws from a ChaCha stream keyed by
//! (seed, tag, index) through SHA-256, so replicas can be fanned out over any
//! number of workers and still produce identical output: stream identity
//! depends only on the triple, never on scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// An independent generator for logical stream `index` of the routine `tag`.
pub fn stream(seed: u64, tag: &str, index: u64) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((tag.len() as u64).to_le_bytes());
    h.update(tag.as_bytes());
    h.update(index.to_le_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

/// First 16 hex characters of SHA-256(bytes); used to fingerprint configs.
pub fn sha256_hex16(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}
