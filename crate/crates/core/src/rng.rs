//! Splittable, counter-based random streams.
//!
//! A stream is a `(seed, path)` pair. The seed keys a ChaCha8 generator and
//! the path selects its 64-bit stream id, so the `k`-th draw of a stream is
//! a pure function of `(seed, path, k)`. Substreams are derived by hashing
//! an index into the path, which lets independent workers (parameter
//! samples, shot sets, Hamiltonian instances) draw without coordination.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    seed: u64,
    path: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, path: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derives an independent child stream labelled by `index`.
    pub fn substream(&self, index: u64) -> Self {
        Self {
            seed: self.seed,
            path: splitmix64(self.path ^ splitmix64(index.wrapping_add(1))),
        }
    }

    /// A standalone 64-bit seed derived from this stream and `index`.
    pub fn child_seed(&self, index: u64) -> u64 {
        splitmix64(self.seed ^ splitmix64(self.path ^ splitmix64(index.wrapping_add(0x5EED))))
    }

    /// A generator positioned at the first draw of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.path);
        rng
    }
}
