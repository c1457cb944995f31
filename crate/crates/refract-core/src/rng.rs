//! Reproducible random streams.
//!
//! A stream is a ChaCha8 generator keyed by `(seed, stream)`. Path `i` of an
//! experiment starts at word offset `i·2^36` of its stream, so results do not
//! depend on how paths are split between workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const PATH_STRIDE_WORDS: u128 = 1 << 36;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Generator positioned at the start of the stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream);
        r
    }

    /// Generator for path `index` within this stream.
    pub fn path_rng(&self, index: u64) -> ChaCha8Rng {
        let mut r = self.rng();
        r.set_word_pos(index as u128 * PATH_STRIDE_WORDS);
        r
    }

    /// A derived stream for a separate sub-experiment.
    pub fn child(&self, tag: u64) -> Self {
        let mixed = self
            .stream
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .rotate_left(17)
            ^ tag.wrapping_add(1);
        Self {
            seed: self.seed,
            stream: mixed,
        }
    }
}
