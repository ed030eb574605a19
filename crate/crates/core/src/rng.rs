//! Reproducible random streams.
//!
//! Every replication owns a ChaCha stream keyed by a seed mixed from the
//! campaign seed and the replication index, so results never depend on which
//! worker ran the replication.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type LabRng = ChaCha12Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `r` under `master`.
pub fn replication_seed(master: u64, r: u64) -> u64 {
    mix64(master ^ mix64(r.wrapping_add(0x632B_E59B_D9B4_E019)))
}

pub fn rng_from_seed(seed: u64) -> LabRng {
    LabRng::seed_from_u64(seed)
}
