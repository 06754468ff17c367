//! Reproducible random substreams.
//!
//! A master seed plus a path of indices (cell, replication, mechanism, ...)
//! deterministically selects an independent ChaCha stream. Parallel code
//! derives one stream per unit of work up front, so results do not depend
//! on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

// SplitMix64 finalizer; full-period bijective mixer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Collapse a master seed and an index path into one 64-bit stream key.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    let mut state = mix64(master);
    for &part in path {
        state = mix64(state ^ mix64(part));
    }
    state
}

/// An independent generator for the given (master seed, path) pair.
pub fn derive_rng(master: u64, path: &[u64]) -> ChaCha12Rng {
    let mut state = derive_seed(master, path);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        state = mix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha12Rng::from_seed(seed)
}
