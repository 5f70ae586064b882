//! Seeded random streams. Trial `k` of a run with seed `s` always draws from
//! ChaCha substream `(s, k)`, so parallel schedules cannot change results.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

pub type TrialRng = ChaCha12Rng;

pub fn substream(seed: u64, stream: u64) -> TrialRng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw from `[-scale, scale]`.
pub fn symmetric(rng: &mut TrialRng, scale: f64) -> f64 {
    if scale == 0.0 {
        return 0.0;
    }
    rng.random_range(-scale..=scale)
}
