//! Seed derivation.
//!
//! Every random stream in the crate is a ChaCha8 generator whose seed is
//! derived from one master seed and a path of integer labels (replication,
//! stream, ...). Streams with different labels are statistically independent
//! and any stream can be regenerated without touching the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The five primitive Poisson streams of the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Arrival1 = 0,
    Arrival2 = 1,
    Service1 = 2,
    Service2 = 3,
    Service3 = 4,
}

// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministically derive a child seed from `master` and a label path.
pub fn derive_seed(master: u64, labels: &[u64]) -> u64 {
    labels.iter().fold(mix64(master), |acc, &l| mix64(acc ^ mix64(l.wrapping_add(0x5851_F42D_4C95_7F2D))))
}

pub fn rng_for(master: u64, labels: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, labels))
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    rng_for(seed, &[stream as u64])
}
