//! Deterministic stream-indexed random number generation.
//!
//! A single 64-bit master seed keys a ChaCha cipher; the 64-bit stream index
//! selects one of 2^64 statistically independent streams of that cipher.
//! Purpose tags partition the index space so that path generation, limit-law
//! draws, and target estimation never touch the same stream, and replication
//! k always sees the same stream regardless of worker count or scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Disjoint regions of the stream-index space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamPurpose {
    /// Streams that drive path synthesis.
    Path,
    /// Streams for the independent standard normal in limit-law draws.
    Draw,
    /// Streams for Monte Carlo moment-target estimation.
    Target,
    /// Anything else (calibration, ad hoc sampling).
    Aux,
}

impl StreamPurpose {
    fn tag(self) -> u64 {
        match self {
            StreamPurpose::Path => 0,
            StreamPurpose::Draw => 1,
            StreamPurpose::Target => 2,
            StreamPurpose::Aux => 3,
        }
    }
}

/// Number of low bits reserved for the replication index.
const REPLICATE_BITS: u32 = 60;

/// Fully reproducible handle on one RNG stream: master seed plus stream index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        RngStream {
            master_seed,
            stream_index,
        }
    }

    /// Stream for `replicate` within the region owned by `purpose`.
    /// Replication indices must stay below 2^60.
    pub fn for_purpose(master_seed: u64, purpose: StreamPurpose, replicate: u64) -> Self {
        debug_assert!(replicate < 1u64 << REPLICATE_BITS);
        RngStream {
            master_seed,
            stream_index: (purpose.tag() << REPLICATE_BITS) | replicate,
        }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn rng(self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }

    /// `count` standard normal draws from the start of this stream.
    pub fn normals(self, count: usize) -> Vec<f64> {
        let mut rng = self.rng();
        (0..count)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_stream_reproduces_bitwise() {
        let a = RngStream::for_purpose(42, StreamPurpose::Path, 7).normals(64);
        let b = RngStream::for_purpose(42, StreamPurpose::Path, 7).normals(64);
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_purposes_and_replicates_decorrelate() {
        let base = RngStream::for_purpose(42, StreamPurpose::Path, 7).normals(64);
        let other_rep = RngStream::for_purpose(42, StreamPurpose::Path, 8).normals(64);
        let other_purpose = RngStream::for_purpose(42, StreamPurpose::Draw, 7).normals(64);
        let other_seed = RngStream::for_purpose(43, StreamPurpose::Path, 7).normals(64);
        assert_ne!(base, other_rep);
        assert_ne!(base, other_purpose);
        assert_ne!(base, other_seed);
    }

    #[test]
    fn purpose_regions_do_not_collide() {
        let a = RngStream::for_purpose(1, StreamPurpose::Path, (1 << 60) - 1);
        let b = RngStream::for_purpose(1, StreamPurpose::Draw, 0);
        assert_ne!(a.stream_index, b.stream_index);
        assert_eq!(b.stream_index, 1 << 60);
    }

    #[test]
    fn normals_are_standardized() {
        // Loose moment sanity on a single long stream.
        let xs = RngStream::for_purpose(123, StreamPurpose::Aux, 0).normals(200_000);
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64;
        assert!(m.abs() < 0.01, "mean = {m}");
        assert!((v - 1.0).abs() < 0.02, "var = {v}");
    }
}
