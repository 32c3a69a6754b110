//! Seeded random streams.
//!
//! Every random quantity in the crate comes from a xoshiro256** generator whose
//! 256-bit state is filled from a 64-bit seed with SplitMix64. Uniform reals use
//! the top 53 bits of one output: `u = (next >> 11) * 2^-53`, mapped to
//! `2u - 1`. The draw `u = 0` would give exactly -1 and is rejected, so samples
//! always lie in the open interval (-1, 1).

use std::fmt;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Seed(pub u64);

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}

impl fmt::Display for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Seed {
    /// Child seed for a labelled sub-stream, e.g. `(size, trial)` in a sweep.
    ///
    /// Each component is folded through SplitMix64 in turn:
    /// `h = splitmix64(h ^ c)` starting from `h = seed`. For a fixed parent the
    /// map from one component to the child is a bijection, so distinct indices
    /// never collide.
    pub fn derive(self, components: &[u64]) -> Seed {
        let mut h = self.0;
        for &c in components {
            h = splitmix64(h ^ c);
        }
        Seed(h)
    }

    pub fn rng(self) -> Xoshiro256StarStar {
        Xoshiro256StarStar::seed_from_u64(self.0)
    }
}

/// Uniform on [0, 1) from the top 53 bits of one draw.
#[inline]
pub fn unit_f64<R: RngCore>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform on the open interval (-1, 1).
pub fn symmetric_f64<R: RngCore>(rng: &mut R) -> f64 {
    loop {
        let u = unit_f64(rng);
        if u > 0.0 {
            return 2.0 * u - 1.0;
        }
    }
}

/// Uniform on (-limit, limit).
pub fn symmetric_scaled<R: RngCore>(rng: &mut R, limit: f64) -> f64 {
    limit * symmetric_f64(rng)
}

/// Fisher-Yates shuffle of `0..n`, drawing `j` uniformly in `0..=i` for
/// `i = n-1, ..., 1` by rejection-free multiply-shift on the upper 32 bits.
pub fn permutation<R: RngCore>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    shuffle(rng, &mut idx);
    idx
}

pub fn shuffle<R: RngCore, T>(rng: &mut R, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = bounded(rng, i as u64 + 1) as usize;
        items.swap(i, j);
    }
}

/// Uniform integer in `0..bound` via 128-bit widening multiply with rejection.
fn bounded<R: RngCore>(rng: &mut R, bound: u64) -> u64 {
    let threshold = bound.wrapping_neg() % bound;
    loop {
        let m = (rng.next_u64() as u128) * (bound as u128);
        if (m as u64) >= threshold {
            return (m >> 64) as u64;
        }
    }
}
