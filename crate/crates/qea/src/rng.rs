//! Seeded, counter-based randomness.
//!
//! ChaCha12 keyed by the root seed, with independent substreams selected by
//! index. Substreams make parallel work reproducible: trial `i` sees the
//! same draws no matter how the trials are scheduled.

use rand::SeedableRng;
pub use rand_chacha::ChaCha12Rng;

/// Root generator for a seed.
pub fn root(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Substream `idx` of the root seed.
pub fn substream(seed: u64, idx: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(idx);
    rng
}

/// Two-level substream, e.g. (trial, round).
pub fn substream2(seed: u64, hi: u32, lo: u32) -> ChaCha12Rng {
    substream(seed, ((hi as u64) << 32) | lo as u64)
}
