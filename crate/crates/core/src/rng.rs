//! Seeded, stream-splittable random number generation.
//!
//! Every random quantity in the crate is drawn from ChaCha20 keyed by a user
//! seed. Parallel workers use distinct stream numbers of the same key, so
//! results depend only on `(seed, worker)` and not on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type Rng = ChaCha20Rng;

/// Name recorded next to the seed in every output.
pub const GENERATOR_NAME: &str = "chacha20";

/// Generator for worker `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Split `total` items over `workers` as evenly as possible.
pub fn split_counts(total: usize, workers: usize) -> Vec<usize> {
    let workers = workers.max(1);
    (0..workers)
        .map(|w| total / workers + usize::from(w < total % workers))
        .collect()
}
