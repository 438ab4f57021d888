//! Seed handling: every random component draws from its own ChaCha stream so
//! runs are reproducible and individual sources can be replayed independently.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named substreams of a single master seed.
///
/// Keeping the sources on separate streams lets tests replay, say, the LMO
/// start vectors while drawing fresh sample noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Initial Gaussian sample columns.
    SampleInit,
    /// Power-method start vectors.
    LmoStart,
    /// Per-step scalar noise multiplying the update direction.
    StepNoise,
    /// Rounding noise, one stream per sample column.
    Rounding(u64),
    /// Extreme-point chains, one stream per chain.
    Chain(u64),
    /// Regenerable problem vectors, one stream per index.
    Vector(u64),
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::SampleInit => 0,
            Stream::LmoStart => 1,
            Stream::StepNoise => 2,
            Stream::Rounding(col) => (1 << 32) | col,
            Stream::Chain(c) => (2 << 32) | c,
            Stream::Vector(i) => (3 << 32) | i,
        }
    }
}

/// Derive the RNG for one substream of `seed`.
pub fn substream(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}
