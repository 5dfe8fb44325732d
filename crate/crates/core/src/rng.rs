//! Deterministic RNG fan-out.
//!
//! Every random decision in a run derives from one `u64` seed. Each consumer
//! gets its own ChaCha stream keyed by `(purpose, index)`, so results do not
//! depend on the order in which consumers draw numbers or on thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum Stream {
    Init = 1,
    Seeds = 2,
    Mining = 3,
    Ensemble = 4,
    Split = 5,
    Synth = 6,
    MapQueries = 7,
}

pub fn stream(seed: u64, purpose: Stream, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 40) ^ index);
    rng
}
