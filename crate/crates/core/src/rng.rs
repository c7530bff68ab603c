//! Splittable random keys.
//!
//! A key is an opaque 64-bit state. Splitting is a pure hash, so the key
//! tree of a run depends only on the master seed and never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngKey(u64);

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngKey {
    pub fn new(seed: u64) -> Self {
        RngKey(splitmix64(seed))
    }

    /// Child key number `i`.
    pub fn split(self, i: u64) -> Self {
        RngKey(splitmix64(self.0 ^ splitmix64(i.wrapping_add(0x632b_e59b_d9b4_e019))))
    }

    pub fn split_n(self, n: usize) -> Vec<RngKey> {
        (0..n as u64).map(|i| self.split(i)).collect()
    }

    pub fn rng(self) -> ChaCha8Rng {
        let mut seed = [0u8; 32];
        let mut z = self.0;
        for chunk in seed.chunks_mut(8) {
            z = splitmix64(z);
            chunk.copy_from_slice(&z.to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }

    pub fn raw(self) -> u64 {
        self.0
    }
}
