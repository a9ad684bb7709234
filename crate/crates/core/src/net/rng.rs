//! Counter-keyed uniform draws.
//!
//! Each draw is addressed by `(seed, stream, seq, attempt)` rather than by
//! position in a sequential stream, so a transmission's fate does not depend
//! on how many draws happened before it. The generator is ChaCha8
//! (`rand_chacha`): seeded with `seed_from_u64(seed)`, stream selected with
//! `set_stream(stream)`, and the draw for `(seq, attempt)` is the `u64` at
//! word position `2 * (seq * 256 + attempt)`, mapped to `[0, 1)` by its top
//! 53 bits.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Retry attempts per packet are keyed in 8 bits.
pub const MAX_ATTEMPTS: u32 = 256;

#[derive(Debug, Clone)]
pub struct KeyedUniform {
    rng: ChaCha8Rng,
}

impl KeyedUniform {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    /// Uniform in `[0, 1)` for one transmission attempt.
    pub fn draw(&mut self, seq: u64, attempt: u32) -> f64 {
        debug_assert!(attempt < MAX_ATTEMPTS);
        debug_assert!(seq < (1 << 56));
        let index = (u128::from(seq) << 8) | u128::from(attempt);
        self.rng.set_word_pos(index * 2);
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
