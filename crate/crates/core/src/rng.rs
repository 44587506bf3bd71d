//! Seeded random streams.
//!
//! Every consumer (sampler, dropout, each rollout) draws from its own ChaCha
//! stream derived from the run seed and a tag, so work can be reordered or
//! spread across threads without changing a single draw.

pub use rand_chacha::ChaCha8Rng as StreamRng;
pub use rand_core::RngCore;
use rand_core::SeedableRng;

/// Well-known stream tags.
pub mod tag {
    pub const INIT: u64 = 1;
    pub const SAMPLE: u64 = 2;
    pub const DROPOUT: u64 = 3;
    pub const ROLLOUT: u64 = 4;
    pub const SHUFFLE: u64 = 5;
    pub const EVAL: u64 = 6;
    pub const REFERENCE: u64 = 7;
}

/// Stream for `(seed, tag)`.
pub fn stream(seed: u64, tag: u64) -> StreamRng {
    let mut rng = StreamRng::seed_from_u64(seed);
    rng.set_stream(tag);
    rng
}

/// Mixes an arbitrary number of indices into one 64-bit seed (splitmix64
/// finaliser after each word).
pub fn derive(seed: u64, parts: &[u64]) -> u64 {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    for &p in parts {
        h = mix(h ^ mix(p.wrapping_add(0x632b_e59b_d9b4_e019)));
    }
    h
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform draw in `[0, 1)`.
pub fn uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal draw (Box-Muller).
pub fn normal<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    let u1 = 1.0 - uniform(rng);
    let u2 = uniform(rng);
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
}

/// Index drawn from a discrete distribution by inverse CDF.
pub fn categorical<R: RngCore + ?Sized>(rng: &mut R, probs: &[f64]) -> usize {
    let u = uniform(rng);
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding can leave `acc` a hair under 1; fall back to the last
    // token with non-zero mass.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Fisher-Yates shuffle.
pub fn shuffle<T, R: RngCore + ?Sized>(rng: &mut R, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        items.swap(i, j);
    }
}
