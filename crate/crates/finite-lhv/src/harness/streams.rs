//! Counter-based randomness streams: every round draws from RNGs keyed by
//! (master seed, purpose tag, round index), so shared and local randomness
//! are independent, reproducible, and identical for any worker count or
//! scheduling order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream feeds. Tags keep the shared variable, the parties' local
/// coins and setting generation statistically independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamPurpose {
    Shared,
    Local,
    Settings,
}

impl StreamPurpose {
    fn tag(self) -> u64 {
        match self {
            StreamPurpose::Shared => 0x5348_4152_4544_0001,
            StreamPurpose::Local => 0x4c4f_4341_4c00_0002,
            StreamPurpose::Settings => 0x5345_5454_494e_0003,
        }
    }
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// RNG for one (seed, purpose, round) cell.
pub fn round_rng(seed: u64, purpose: StreamPurpose, round: u64) -> ChaCha8Rng {
    let h1 = mix(seed ^ mix(purpose.tag()));
    let h2 = mix(h1 ^ mix(round));
    let mut key = [0u8; 32];
    for (i, chunk) in key.chunks_mut(8).enumerate() {
        chunk.copy_from_slice(&mix(h2 ^ (i as u64).wrapping_mul(0xa076_1d64_78bd_642f)).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
