//! Seeded, portable random streams.
//!
//! Every random component draws from ChaCha8 keyed by the user seed, with a
//! distinct stream id per component, so adding a consumer never shifts the
//! numbers another consumer sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream ids used inside this crate.
pub mod stream {
    /// Factor for mode `n` in the synthetic generator: `FACTOR + n`.
    pub const FACTOR: u64 = 0x100;
    pub const CORE: u64 = 0x200;
    pub const NOISE: u64 = 0x300;
    /// k-means for mode `n` in the pipeline: `KMEANS + n`.
    pub const KMEANS: u64 = 0x400;
    pub const UNMIXING: u64 = 0x500;
    pub const SUITE: u64 = 0x600;
}

pub fn component_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
