//! Named random streams derived from one root seed.
//!
//! Each stream is keyed by a name and a short index path (round, bidder,
//! ...). The key is folded into a 256-bit ChaCha seed with splitmix64, so
//! streams never share state: an extra retry or an extra bidder cannot
//! shift anybody else's draws.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type StreamRng = ChaCha12Rng;

pub const VALUES: &str = "values";
pub const TIES: &str = "ties";
pub const EBAY_ORDER: &str = "ebay-order";
pub const AGENT: &str = "agent";

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngStreams {
    root: u64,
}

impl RngStreams {
    pub fn new(root: u64) -> Self {
        RngStreams { root }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    pub fn stream(&self, name: &str, path: &[u64]) -> StreamRng {
        let mut state = self.root ^ fnv1a(name);
        let mut mix = splitmix64(&mut state);
        for &p in path {
            state ^= p.wrapping_mul(0xD6E8_FEB8_6659_FD93) ^ mix;
            mix = splitmix64(&mut state);
        }
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        StreamRng::from_seed(seed)
    }

    pub fn values(&self, round: u32) -> StreamRng {
        self.stream(VALUES, &[round as u64])
    }

    pub fn ties(&self, round: u32) -> StreamRng {
        self.stream(TIES, &[round as u64])
    }

    pub fn ebay_order(&self, round: u32) -> StreamRng {
        self.stream(EBAY_ORDER, &[round as u64])
    }

    pub fn agent(&self, bidder: usize, round: u32) -> StreamRng {
        self.stream(AGENT, &[bidder as u64, round as u64])
    }
}
