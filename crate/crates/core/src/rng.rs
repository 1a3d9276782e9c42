//! Seed derivation.
//!
//! Every random decision in the crate draws from a [`ChaCha8Rng`] derived
//! from one user seed, a named sub-stream and an index. Two components that
//! share a seed but use different stream names never see correlated draws,
//! and a walk started from node 17 sees the same draws no matter which
//! worker thread runs it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Named sub-streams of the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Walker,
    Train,
    Eval,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Walker => 0x7761_6c6b,
            Stream::Train => 0x7472_6169,
            Stream::Eval => 0x6576_616c,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for `(seed, stream, index)`.
pub fn derive(seed: u64, stream: Stream, index: u64) -> StreamRng {
    let key = splitmix64(splitmix64(seed ^ stream.tag()).wrapping_add(index));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(stream.tag());
    rng
}
