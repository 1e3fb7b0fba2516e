//! Seed handling.
//!
//! Every simulation run draws from a ChaCha8 stream keyed by a master seed
//! and indexed by a per-run stream number. Streams are independent, so
//! adding runs never changes the randomness of existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream `stream` of the generator keyed by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
