//! Seed derivation for independent, schedule-free random streams.
//!
//! Every stochastic draw in a run (partitioning, batch order, channel noise,
//! evaluation noise) comes from its own ChaCha stream keyed by a tuple of
//! coordinates, so results never depend on which thread ran first.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream purposes. Kept distinct so that no two uses share a key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Init = 1,
    Partition = 2,
    Batches = 3,
    TrainChannel = 4,
    EvalChannel = 5,
    Synthetic = 6,
    EvalSynthetic = 7,
    Holdout = 8,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `(run_seed, stream, coords...)` into one 64-bit seed.
pub fn derive_seed(run_seed: u64, stream: Stream, coords: &[u64]) -> u64 {
    let mut h = splitmix64(run_seed ^ 0x5EED_F00D);
    h = splitmix64(h ^ stream as u64);
    for &c in coords {
        h = splitmix64(h ^ c);
    }
    h
}

pub fn stream(run_seed: u64, stream: Stream, coords: &[u64]) -> Rng {
    Rng::seed_from_u64(derive_seed(run_seed, stream, coords))
}
