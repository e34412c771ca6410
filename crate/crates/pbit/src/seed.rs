//! Counter-based seed derivation.
//!
//! Every stochastic trial in the crate draws from its own ChaCha stream whose
//! seed is a pure function of a base seed and a path of counters (device index,
//! image index, layer, neuron, vote, ...). Results therefore never depend on
//! iteration order or on how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `base` with each counter in `path` in order.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(base.wrapping_add(GOLDEN)), |acc, &c| {
        splitmix64(acc ^ splitmix64(c.wrapping_add(GOLDEN).wrapping_mul(GOLDEN)))
    })
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rng_for(base: u64, path: &[u64]) -> SimRng {
    rng_from_seed(derive_seed(base, path))
}
