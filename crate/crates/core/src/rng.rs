//! Deterministic pseudorandom numbers.
//!
//! The default generator is xoshiro256+ seeded through a splitmix64 expansion.
//! Given the same master seed the output stream is bit-identical on every
//! platform. Parallel experiments give each worker its own stream through
//! [`Xoshiro256Plus::derive_stream`]; states are never shared between threads.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Golden-ratio increment of splitmix64.
const SPLITMIX_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;
/// Odd multiplier used to spread worker indices before mixing.
const STREAM_MULTIPLIER: u64 = 0xd1b5_4a32_d192_ed03;
/// Domain separator so that worker streams never reuse a plain master seed.
const STREAM_TAG: u64 = 0x6a09_e667_f3bc_c909;

/// The splitmix64 output function (Steele, Lea, Flood).
#[inline]
pub fn splitmix64_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A source of uniformly distributed 64-bit words.
///
/// Everything else (unit deviates, bounded indices) is derived from
/// [`next_u64`](RandomSource::next_u64), so any generator can be plugged in.
pub trait RandomSource {
    fn next_u64(&mut self) -> u64;

    /// A uniform deviate in the open interval `(0, 1)` with 53 random bits.
    fn next_unit_open(&mut self) -> f64 {
        loop {
            let x = (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            if x > 0.0 {
                return x;
            }
        }
    }

    /// Uniform on `{0, ..., bound - 1}` with no modulo bias.
    ///
    /// Lemire's multiply-and-reject method: a word is rejected only when it
    /// falls in the `2^64 mod bound` short residue band.
    fn next_below(&mut self, bound: usize) -> usize {
        assert!(bound > 0, "bound must be positive");
        let bound = bound as u64;
        let mut m = (self.next_u64() as u128) * (bound as u128);
        let mut low = m as u64;
        if low < bound {
            let threshold = bound.wrapping_neg() % bound;
            while low < threshold {
                m = (self.next_u64() as u128) * (bound as u128);
                low = m as u64;
            }
        }
        (m >> 64) as usize
    }

    /// Uniform on `{1, ..., n}`.
    fn next_index(&mut self, n: usize) -> usize {
        self.next_below(n) + 1
    }
}

impl<R: RandomSource + ?Sized> RandomSource for &mut R {
    fn next_u64(&mut self) -> u64 {
        (**self).next_u64()
    }
}

/// xoshiro256+ (Blackman & Vigna) with the master seed kept for provenance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Xoshiro256Plus {
    s: [u64; 4],
    seed: u64,
}

/// The generator state used throughout the crate.
pub type RngState = Xoshiro256Plus;

impl Xoshiro256Plus {
    /// Expands `master` into four nonzero state words with splitmix64.
    ///
    /// The splitmix64 counter starts at `master` and advances by the golden
    /// gamma; a zero output word is skipped.
    pub fn seed_from(master: u64) -> Self {
        let mut counter = master;
        let mut s = [0u64; 4];
        let mut filled = 0;
        while filled < 4 {
            counter = counter.wrapping_add(SPLITMIX_GAMMA);
            let word = splitmix64_mix(counter);
            if word != 0 {
                s[filled] = word;
                filled += 1;
            }
        }
        Xoshiro256Plus { s, seed: master }
    }

    /// Seed of the independent stream for `worker` under `master`.
    pub fn stream_seed(master: u64, worker: u64) -> u64 {
        splitmix64_mix(
            splitmix64_mix(master ^ STREAM_TAG) ^ worker.wrapping_mul(STREAM_MULTIPLIER),
        )
    }

    /// The reproducible stream of one worker in a parallel farm.
    pub fn derive_stream(master: u64, worker: u64) -> Self {
        let mut rng = Self::seed_from(Self::stream_seed(master, worker));
        rng.seed = master;
        rng
    }

    /// Restores a saved state; rejects the all-zero state.
    pub fn from_state(s: [u64; 4], seed: u64) -> Result<Self> {
        if s == [0; 4] {
            return Err(Error::out_of_range(
                "generator state",
                "[0, 0, 0, 0]",
                "not all zero",
            ));
        }
        Ok(Xoshiro256Plus { s, seed })
    }

    pub fn state(&self) -> [u64; 4] {
        self.s
    }

    /// Master seed this state was created from.
    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl RandomSource for Xoshiro256Plus {
    #[inline]
    fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[0].wrapping_add(s[3]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }
}
