//! Seed derivation.
//!
//! Every random stream in the crate is a `ChaCha8Rng` seeded from the master
//! seed through [`derive_seed`], keyed by a stream tag and an index (tree
//! number, node counter, restart number, user index, ...). Streams never
//! share state, so work split across threads draws exactly the numbers a
//! sequential run would.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const STREAM_TREE: u64 = 0x7452_4545;
pub const STREAM_BOOTSTRAP: u64 = 0x424f_4f54;
pub const STREAM_NODE: u64 = 0x4e4f_4445;
pub const STREAM_KMEANS: u64 = 0x4b4d_4e53;
pub const STREAM_FOLDS: u64 = 0x464f_4c44;
pub const STREAM_SYNTH_USER: u64 = 0x5553_4552;
pub const STREAM_SYNTH_ANOMALY: u64 = 0x414e_4f4d;
pub const STREAM_GRAPH: u64 = 0x4752_4150;
pub const STREAM_MULTI: u64 = 0x4d55_4c54;

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `splitmix64(splitmix64(master ^ splitmix64(stream)) ^ index)`
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(stream)) ^ index)
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream(master: u64, stream: u64, index: u64) -> ChaCha8Rng {
    seeded(derive_seed(master, stream, index))
}
