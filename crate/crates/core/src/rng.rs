//! Seeded random streams. A root seed is mixed with a chain index and a
//! purpose tag to derive independent substreams, so parallel runs stay
//! reproducible.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Purpose tags for substream derivation.
pub mod purpose {
    pub const GLAUBER: u64 = 1;
    pub const FIELD: u64 = 2;
    pub const ALGORITHM: u64 = 3;
    pub const CENSORED: u64 = 4;
    pub const SCHEDULE: u64 = 5;
    pub const COUPLING: u64 = 6;
    pub const WITNESS: u64 = 7;
    pub const LIFT: u64 = 8;
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn substream_seed(root: u64, chain: u64, tag: u64) -> u64 {
    const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
    let a = mix64(root.wrapping_add(GOLDEN));
    let b = mix64(a ^ chain.wrapping_mul(GOLDEN).wrapping_add(1));
    mix64(b ^ tag.wrapping_mul(0xd6e8_feb8_6659_fd93).wrapping_add(2))
}

pub fn substream(root: u64, chain: u64, tag: u64) -> Stream {
    Stream::seed_from_u64(substream_seed(root, chain, tag))
}

/// Index in 0..n from one 64-bit draw by a widening multiply (no rejection
/// loop; the bias is below n / 2^64).
#[inline]
pub fn index<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> usize {
    ((rng.next_u64() as u128 * n as u128) >> 64) as usize
}

/// Uniform real in [0,1) with 53 random bits.
#[inline]
pub fn unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Draws an index from unnormalized nonnegative weights.
pub fn categorical<R: RngCore + ?Sized>(rng: &mut R, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = unit(rng) * total;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            if u < w {
                return i;
            }
            u -= w;
            last = i;
        }
    }
    last
}

pub fn bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    unit(rng) < p
}
