//! Reproducible seed derivation.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Independent seed for sub-stream `stream` of `base`.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(stream);
    rng.next_u64()
}
