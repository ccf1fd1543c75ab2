//! Counter-addressed random streams.
//!
//! A stream is ChaCha8 keyed by the master seed with the stream index as the
//! ChaCha nonce. The `n`-th 64-bit word of a stream is a fixed function of
//! `(seed, stream, n)`, so a run can be replayed or resumed at any crossing.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct RngStream {
    master_seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(master_seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream);
        Self {
            master_seed,
            stream,
            rng,
        }
    }

    /// Stream positioned at its `counter`-th 64-bit word.
    pub fn at(master_seed: u64, stream: u64, counter: u64) -> Self {
        let mut s = Self::new(master_seed, stream);
        s.seek(counter);
        s
    }

    pub fn seek(&mut self, counter: u64) {
        self.rng.set_word_pos(counter as u128 * 2);
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Number of 64-bit words consumed so far.
    pub fn counter(&self) -> u64 {
        (self.rng.get_word_pos() / 2) as u64
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// An independent stream for the `j`-th branch of this one, e.g. the
    /// continuations of a frozen prefix.
    pub fn branch(&self, j: u64) -> Self {
        let id = splitmix64(self.stream ^ splitmix64(j.wrapping_add(0xA076_1D64_78BD_642F)));
        Self::new(self.master_seed, id)
    }
}

/// Threshold `τ` with `P(u < τ) = q` for a uniform 64-bit `u`.
pub fn probability_threshold(q: f64) -> u64 {
    if q >= 1.0 {
        u64::MAX
    } else if q <= 0.0 {
        0
    } else {
        (q * 18_446_744_073_709_551_616.0) as u64
    }
}
