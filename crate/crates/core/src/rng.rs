//! Named, seeded random streams.
//!
//! Every source of randomness is derived from one top-level seed plus a
//! [`Stream`] tag and an index path, so each component can be varied on its
//! own while the rest of a run stays fixed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    PoolShuffle,
    CandidateNoise,
    Interviewer,
    Baseline,
    Population,
    GroundTruth,
    Benchmark,
    Reference,
    /// Per-run seeds handed to the interview engine.
    Interview,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::PoolShuffle => 0x706f_6f6c,
            Stream::CandidateNoise => 0x6e6f_6973,
            Stream::Interviewer => 0x7065_6c73,
            Stream::Baseline => 0x6261_7365,
            Stream::Population => 0x706f_7075,
            Stream::GroundTruth => 0x7472_7574,
            Stream::Benchmark => 0x6265_6e63,
            Stream::Reference => 0x7265_6673,
            Stream::Interview => 0x696e_7476,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a 64-bit sub-seed from `seed`, a stream tag and an index path.
pub fn derive_seed(seed: u64, stream: Stream, path: &[u64]) -> u64 {
    let mut h = splitmix64(seed ^ stream.tag());
    for &p in path {
        h = splitmix64(h ^ splitmix64(p));
    }
    h
}

pub fn stream_rng(seed: u64, stream: Stream, path: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream, path))
}
