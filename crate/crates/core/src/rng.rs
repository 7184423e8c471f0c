//! Reproducible random streams.
//!
//! A [`RandomSource`] names one ChaCha8 stream by `(seed, stream_id)`.
//! Work that is split across threads derives one child source per block
//! with [`RandomSource::child`], so results never depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomSource {
    pub seed: u64,
    pub stream_id: u64,
}

impl RandomSource {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RandomSource { seed, stream_id }
    }

    pub fn from_seed(seed: u64) -> Self {
        RandomSource::new(seed, 0)
    }

    pub fn rng(&self) -> SimRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Independent sub-source for block `index` of this source's work.
    pub fn child(&self, index: u64) -> RandomSource {
        RandomSource {
            seed: splitmix64(self.seed ^ splitmix64(self.stream_id.wrapping_add(0xA076_1D64_78BD_642F))),
            stream_id: index,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
