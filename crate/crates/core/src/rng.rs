//! Counter-based random substreams.
//!
//! A substream is a ChaCha8 generator keyed by a 64-bit seed and a 64-bit
//! stream id, so work units can be processed in any order on any number of
//! threads and still see the same random numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Generator for `(key, stream)`.
pub fn substream(key: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(stream);
    rng
}

/// Mixes a master seed with a sequence of labels into a child key.
pub fn derive_key(master: u64, labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(splitmix(master), |acc, &l| splitmix(acc ^ splitmix(l)))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
