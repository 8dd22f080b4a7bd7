//! Seeded random streams.
//!
//! Every stochastic component takes a `&mut SimRng`. Experiments derive
//! independent streams from a base seed with [`derive_seed`], so that a
//! replication or a time slot can be regenerated in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream tags used by the harness when deriving seeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Occupancy = 1,
    Matrix = 2,
    Policy = 3,
    Slot = 4,
}

/// Mixes `(base, stream, index)` into a new 64-bit seed (splitmix64 finaliser).
pub fn derive_seed(base: u64, stream: Stream, index: u64) -> u64 {
    let mut z = base
        ^ (stream as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn seeded(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

pub fn stream(base: u64, stream: Stream, index: u64) -> SimRng {
    seeded(derive_seed(base, stream, index))
}
