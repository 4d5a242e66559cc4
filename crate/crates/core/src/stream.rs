//! Keyed deterministic random streams.
//!
//! Every secret key seeds a ChaCha20 generator (`rand_chacha::ChaCha20Rng`,
//! seeded through `SeedableRng::seed_from_u64`). Integer draws use rejection
//! sampling so that `below(n)` is exactly uniform, and permutations are
//! produced by a forward Fisher-Yates pass over those draws. A stream whose
//! draws are all zero therefore yields the identity permutation, orientation
//! 0 and polarity bit 0, which tests use to build an identity schedule.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

/// Source of raw 64-bit draws plus the derived sampling primitives.
pub trait KeyStream {
    fn next_u64(&mut self) -> u64;

    /// Uniform integer in `[0, n)`. `n` must be positive.
    fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let zone = u64::MAX - (u64::MAX % n + 1) % n;
        loop {
            let x = self.next_u64();
            if x <= zone {
                return x % n;
            }
        }
    }

    /// Uniform float in `[0, 1)` with 53 bits of resolution.
    fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Bernoulli draw that is `true` with probability `p`.
    fn bit(&mut self, p: f64) -> bool {
        self.unit() >= 1.0 - p
    }

    fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..n).collect();
        for i in 0..n.saturating_sub(1) {
            let j = i + self.below((n - i) as u64) as usize;
            perm.swap(i, j);
        }
        perm
    }
}

/// A seeded ChaCha20 stream that counts the draws it has handed out.
#[derive(Clone, Debug)]
pub struct RandomStream {
    seed: u64,
    position: u64,
    rng: ChaCha20Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            position: 0,
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    /// Independent stream for `lane` of the same key, seeded with `seed ^ lane_constant(lane)`.
    pub fn lane(seed: u64, lane: u64) -> Self {
        Self::new(seed ^ lane_constant(lane))
    }

    /// Stream seeded from several words, for per-task randomness (seed, generation, index, ...).
    pub fn derived(words: &[u64]) -> Self {
        Self::new(mix(words))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn position(&self) -> u64 {
        self.position
    }

    pub fn reset(&mut self) {
        *self = Self::new(self.seed);
    }
}

impl KeyStream for RandomStream {
    fn next_u64(&mut self) -> u64 {
        self.position += 1;
        self.rng.next_u64()
    }
}

/// Stream that only ever returns zero.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroStream;

impl KeyStream for ZeroStream {
    fn next_u64(&mut self) -> u64 {
        0
    }
}

pub fn lane_constant(lane: u64) -> u64 {
    0x9E37_79B9_7F4A_7C15u64.wrapping_mul(lane + 1)
}

/// SplitMix64 finaliser folded over the words.
pub fn mix(words: &[u64]) -> u64 {
    let mut h = 0x243F_6A88_85A3_08D3u64;
    for &w in words {
        h = splitmix(h ^ w);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn draw_permutation(stream: &mut impl KeyStream, n: usize) -> Vec<usize> {
    stream.permutation(n)
}

/// Inverse of a permutation given as `perm[i] = image of i`.
pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

pub fn is_permutation(perm: &[usize]) -> bool {
    let mut seen = vec![false; perm.len()];
    perm.iter().all(|&p| p < seen.len() && !std::mem::replace(&mut seen[p], true))
}
