//! Seeds for reproducible, independent random streams.
//!
//! A [`RandomSeed`] names a ChaCha8 stream: `stream_id` seeds the key and
//! `replicate_index` selects one of the 2^64 streams of that key, so two
//! seeds with the same `stream_id` and different indices draw from
//! non-overlapping sequences.

use std::fmt;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RandomSeed {
    pub stream_id: u64,
    pub replicate_index: u64,
}

impl RandomSeed {
    pub const fn new(stream_id: u64) -> Self {
        Self {
            stream_id,
            replicate_index: 0,
        }
    }

    /// Seed of replicate `index` within this seed's stream family.
    pub const fn replicate(self, index: u64) -> Self {
        Self {
            stream_id: self.stream_id,
            replicate_index: index,
        }
    }

    /// A new stream family derived from this seed and a tag. Used to give
    /// separate phases of a study (simulation, fitting, prediction) their
    /// own families.
    pub fn derive(self, tag: u64) -> Self {
        let mixed = splitmix64(
            splitmix64(self.stream_id) ^ splitmix64(self.replicate_index.wrapping_add(tag.rotate_left(32))) ^ tag,
        );
        Self::new(mixed)
    }

    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.stream_id);
        rng.set_stream(self.replicate_index);
        rng
    }
}

impl fmt::Display for RandomSeed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.stream_id, self.replicate_index)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
