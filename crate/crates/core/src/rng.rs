//! Deterministic random substreams.
//!
//! Every random draw in the pipeline comes from a ChaCha stream whose seed is
//! derived from a run seed plus a tag path, e.g. `(seed, TRAIN, i, j)` for one
//! simulated cell. Results therefore do not depend on execution order or
//! thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

pub mod tag {
    pub const DESIGN: u64 = 0x6465_7369;
    pub const TRAIN: u64 = 0x7472_6169;
    pub const TEST: u64 = 0x7465_7374;
    pub const RESTART: u64 = 0x7273_7472;
    pub const RAYS: u64 = 0x7261_7973;
    pub const DIRECTIONS: u64 = 0x6469_7273;
    pub const JNR: u64 = 0x6a6e_7221;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a seed with a path of tags into a new 64-bit seed.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

pub fn substream(seed: u64, path: &[u64]) -> Stream {
    Stream::seed_from_u64(derive_seed(seed, path))
}
