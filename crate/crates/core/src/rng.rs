//! Counter-based random streams.
//!
//! Every consumer of randomness asks for a stream identified by
//! `(master seed, domain, index)`. Streams are ChaCha8 keyed by the mixed
//! `(seed, domain)` pair with `index` as the ChaCha stream id, so any stream
//! can be built independently of the others and of thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Well-known stream domains.
pub mod domain {
    pub const TRAIN_INIT: u64 = 1;
    pub const DOC_TEST: u64 = 2;
    pub const CLUSTER_TEST: u64 = 3;
    pub const SYNTH_TOPICS: u64 = 4;
    pub const SYNTH_DOCS: u64 = 5;
    pub const SYNTH_SHUFFLE: u64 = 6;
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combine a parent key with a label into a child key.
pub fn derive(key: u64, label: u64) -> u64 {
    mix64(key ^ mix64(label.wrapping_add(0xD134_2543_DE82_EF95)))
}

pub fn stream(seed: u64, domain: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, domain));
    rng.set_stream(index);
    rng
}
