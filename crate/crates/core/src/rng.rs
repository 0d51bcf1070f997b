//! Counter-based random substreams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by
//! `(seed, domain, a, b)`. Work items own their stream, so results do not
//! depend on how tasks are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Namespaces that keep substreams of different consumers apart.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Resampling = 1,
    Additive = 2,
    Sensitivity = 3,
    Regression = 4,
    Calibration = 5,
    Masking = 6,
}

pub fn substream(seed: u64, domain: Domain, a: u64, b: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
    key[16..24].copy_from_slice(&a.to_le_bytes());
    key[24..].copy_from_slice(&b.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Derives a child seed, used when one study spawns many independent runs.
pub fn child_seed(seed: u64, domain: Domain, a: u64, b: u64) -> u64 {
    use rand::RngCore;
    substream(seed, domain, a, b).next_u64()
}
