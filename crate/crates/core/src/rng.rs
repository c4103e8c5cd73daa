//! Deterministic seeding and sampling primitives.
//!
//! Every randomized operation in this crate derives its stream from a user
//! seed through [`sub_seed`] and drives a ChaCha12 generator, so identical
//! (input, spec, seed) triples reproduce byte-identical output. The exact
//! constants are fixed here so independent implementations can reproduce the
//! streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// One splitmix64 step (fixed constants 0x9E3779B97F4A7C15,
/// 0xBF58476D1CE4E5B9, 0x94D049BB133111EB).
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sub-seed for indexed stream `index` of `seed`: one splitmix64 step of
/// `seed ^ (index * 0xA0761D6478BD642F)`.
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    let mut state = seed ^ index.wrapping_mul(0xA076_1D64_78BD_642F);
    splitmix64(&mut state)
}

/// Seeded ChaCha12 generator for stream `index` of `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(sub_seed(seed, index))
}

/// Standard normal draw via Box-Muller (cosine branch), consuming exactly two
/// 64-bit words: `sqrt(-2 ln u1) * cos(2 pi u2)` with `u1` in (0,1] and `u2`
/// in [0,1), both built from the top 53 bits of a word.
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    const TWO_53: f64 = 9_007_199_254_740_992.0;
    let u1 = ((rng.next_u64() >> 11) + 1) as f64 / TWO_53;
    let u2 = (rng.next_u64() >> 11) as f64 / TWO_53;
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
