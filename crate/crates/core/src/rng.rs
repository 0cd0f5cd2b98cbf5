//! Pinned random streams.
//!
//! Every random draw in the crate comes from SplitMix64 (Steele, Lea and
//! Flood's 64-bit generator: a Weyl counter with increment
//! `0x9E3779B97F4A7C15` followed by a fixed mixing function). The state is
//! initialised to the seed itself. Conversions to floats and bounded integers
//! are defined here so that a run can be replayed bit-for-bit by any other
//! implementation of the same rules:
//!
//! * `next_f64`: `(next_u64() >> 11) * 2^-53`, uniform on `[0, 1)`.
//! * `below(n)`: draw `x = next_u64()` until `x < u64::MAX - u64::MAX % n`,
//!   then return `x % n`.
//! * `child_seed(master, i)`: `mix64(master ^ mix64(i + 1) * GOLDEN)` with
//!   wrapping arithmetic; see [`child_seed`].

use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The SplitMix64 output function.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of the `index`-th child stream of `master`.
///
/// Children are independent of the order in which they are requested, which
/// is what makes parallel rollouts reproducible.
pub fn child_seed(master: u64, index: u64) -> u64 {
    let salt = mix64(index.wrapping_add(1)).wrapping_mul(GOLDEN_GAMMA);
    mix64(master ^ salt)
}

/// A deterministic stream of random numbers.
#[derive(Debug, Clone)]
pub struct RngStream {
    inner: SplitMix64,
}

impl RngStream {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            inner: SplitMix64::seed_from_u64(seed),
        }
    }

    /// Stream for the `index`-th child of `master`.
    pub fn child(master: u64, index: u64) -> Self {
        Self::from_seed(child_seed(master, index))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "empty range");
        let limit = u64::MAX - u64::MAX % n;
        loop {
            let x = self.next_u64();
            if x < limit {
                return x % n;
            }
        }
    }

    /// Uniform integer in `low..=high`.
    pub fn range_inclusive(&mut self, low: u64, high: u64) -> u64 {
        debug_assert!(low <= high);
        match (high - low).checked_add(1) {
            Some(span) => low + self.below(span),
            None => self.next_u64(),
        }
    }

    /// Fisher–Yates shuffle, walking from the back.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
