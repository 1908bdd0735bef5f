//! Deterministic random streams.
//!
//! Every random decision draws from a ChaCha8 stream whose 256-bit key is
//! `SHA-256(base_seed as u64 LE || len(experiment) as u64 LE || experiment
//! || purpose)`. Streams for different purposes are independent, and a
//! stream never depends on how many other streams were consumed before it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Rng = ChaCha8Rng;

pub fn derive_key(base_seed: u64, experiment: &str, purpose: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(base_seed.to_le_bytes());
    h.update((experiment.len() as u64).to_le_bytes());
    h.update(experiment.as_bytes());
    h.update(purpose.as_bytes());
    h.finalize().into()
}

/// A 64-bit seed for APIs that take a plain integer seed.
pub fn derive_seed(base_seed: u64, experiment: &str, purpose: &str) -> u64 {
    let key = derive_key(base_seed, experiment, purpose);
    u64::from_le_bytes(key[..8].try_into().unwrap())
}

pub fn stream(base_seed: u64, experiment: &str, purpose: &str) -> Rng {
    ChaCha8Rng::from_seed(derive_key(base_seed, experiment, purpose))
}
