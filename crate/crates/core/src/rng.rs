//! Seeded random streams.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] whose 64-bit
//! seed is derived from a master seed, a purpose tag and a trial index:
//!
//! ```text
//! seed = splitmix64(splitmix64(master ^ fnv1a64(tag)) ^ index)
//! ```
//!
//! Two streams with different `(tag, index)` pairs are independent for all
//! practical purposes, and a stream never depends on how many draws another
//! stream consumed. The generator identity is recorded in every report as
//! [`PRNG_ID`] so results can be reproduced by a different implementation
//! that uses the same algorithm.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator identifier written into report headers.
pub const PRNG_ID: &str = "chacha8-rand_chacha0.3+splitmix64-fnv1a-v1";

pub type StreamRng = ChaCha8Rng;

/// Stream tags used across the crate. Keeping them here makes collisions visible.
pub mod tags {
    pub const INIT: &str = "init";
    pub const SHUFFLE: &str = "shuffle";
    pub const DATA_TRAIN: &str = "data/train";
    pub const DATA_TEST: &str = "data/test";
    pub const EXIT_HEAD: &str = "exit-head";
    pub const FINE_TUNE: &str = "fine-tune";
    pub const CHANNEL: &str = "channel";
    pub const TRAIN: &str = "train";
    pub const NESTED: &str = "nested";
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Derives the seed of stream `(tag, index)` under `master`.
pub fn derive_seed(master: u64, tag: &str, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ fnv1a64(tag.as_bytes())) ^ index)
}

/// Opens the stream `(tag, index)` under `master`.
pub fn stream(master: u64, tag: &str, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(master, tag, index))
}
