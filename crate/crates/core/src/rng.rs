//! Seeded random streams.
//!
//! Every run derives independent ChaCha streams from a single seed, one per
//! random source, so that switching one error source on or off leaves the
//! draws of all the others untouched.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;

/// The random sources of a two-player run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    /// Player `i`'s draw of an intended action from its mixed strategy.
    Decision(usize),
    /// Player `i`'s trembling hand (decision error).
    Tremble(usize),
    /// The channel through which player `i`'s actions are observed.
    Channel(usize),
}

impl Source {
    fn stream_id(self) -> u64 {
        match self {
            Source::Decision(i) => i as u64,
            Source::Tremble(i) => 2 + i as u64,
            Source::Channel(i) => 4 + i as u64,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunStreams {
    decision: [ChaCha8Rng; 2],
    tremble: [ChaCha8Rng; 2],
    channel: [ChaCha8Rng; 2],
}

impl RunStreams {
    pub fn new(seed: u64) -> Self {
        let stream = |s: Source| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s.stream_id());
            rng
        };
        RunStreams {
            decision: [stream(Source::Decision(0)), stream(Source::Decision(1))],
            tremble: [stream(Source::Tremble(0)), stream(Source::Tremble(1))],
            channel: [stream(Source::Channel(0)), stream(Source::Channel(1))],
        }
    }

    pub fn get(&mut self, source: Source) -> &mut ChaCha8Rng {
        match source {
            Source::Decision(i) => &mut self.decision[i],
            Source::Tremble(i) => &mut self.tremble[i],
            Source::Channel(i) => &mut self.channel[i],
        }
    }
}

/// Draws an index with probability proportional to `probs` using one uniform draw.
pub fn sample_index<T: Scalar, R: Rng + ?Sized>(probs: impl IntoIterator<Item = T>, rng: &mut R) -> usize {
    let u = T::lit(rng.gen::<f64>());
    let mut acc = T::zero();
    let mut last_positive = 0;
    for (j, p) in probs.into_iter().enumerate() {
        if p > T::zero() {
            last_positive = j;
        }
        acc += p;
        if u < acc {
            return j;
        }
    }
    // Cumulative sum fell short of u by rounding.
    last_positive
}
