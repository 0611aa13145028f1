//! Per-trial random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for trial `trial` of a run seeded with `seed`. The output only
/// depends on the pair, never on which thread runs the trial or when.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}
