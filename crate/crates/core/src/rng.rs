//! Named random streams derived from a single seed.
//!
//! Every consumer draws from its own ChaCha stream, so adding draws to one
//! purpose never shifts the numbers another purpose sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Spawn,
    Mutation,
    Crossover,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Spawn => 1,
            Stream::Mutation => 2,
            Stream::Crossover => 3,
        }
    }
}

pub fn stream(seed: u64, purpose: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose.id());
    rng
}

/// Serializable position of a named stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamState {
    pub seed: u64,
    pub stream: u64,
    /// Word position as a decimal string (u128 does not fit JSON numbers).
    pub word_pos: String,
}

impl StreamState {
    pub fn capture(seed: u64, rng: &ChaCha8Rng) -> Self {
        StreamState {
            seed,
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos().to_string(),
        }
    }

    pub fn restore(&self) -> Option<ChaCha8Rng> {
        let pos: u128 = self.word_pos.parse().ok()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(pos);
        Some(rng)
    }
}
