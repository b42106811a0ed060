use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::normal::quantile;
use super::sobol::SobolGenerator;

/// What a derived stream is used for; part of the stream-id hash so that
/// different consumers at the same (repetition, step, cell) never collide.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Noise = 1,
    DigitalShift = 2,
    Shuffle = 3,
    Initial = 4,
    Position = 5,
    Wall = 6,
    WallShift = 7,
    Demo = 8,
}

#[inline]
pub(crate) fn mix(mut z: u64) -> u64 {
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes an ordered tuple of indices into a 64-bit stream id.
pub fn stream_id(purpose: Purpose, parts: &[u64]) -> u64 {
    parts.iter().fold(mix(purpose as u64 ^ 0x9e37_79b9_7f4a_7c15), |h, &p| {
        mix(h.rotate_left(17) ^ p.wrapping_add(0x9e37_79b9_7f4a_7c15))
    })
}

/// Seedable pseudo-random stream (ChaCha8: 256-bit key from the seed,
/// 64-bit stream selector, 64-bit block counter).
#[derive(Clone, Debug)]
pub struct PseudoStream {
    rng: ChaCha8Rng,
}

impl PseudoStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    /// Stream keyed by `purpose` and an index tuple such as
    /// `(repetition, step, cell)`.
    pub fn keyed(seed: u64, purpose: Purpose, parts: &[u64]) -> Self {
        Self::new(seed, stream_id(purpose, parts))
    }

    #[inline]
    pub fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on the open interval (0, 1): midpoints of a 2^-53 grid.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        quantile(self.uniform())
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for x in out {
            *x = self.normal();
        }
    }

    pub(crate) fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// `n` i.i.d. standard-normal deviates (inverse-CDF transform).
pub fn pseudo_normal_block(stream: &mut PseudoStream, n: usize) -> Vec<f64> {
    (0..n).map(|_| stream.normal()).collect()
}

/// Uniform random permutation in place (Fisher-Yates).
pub fn shuffle<T>(items: &mut [T], stream: &mut PseudoStream) {
    items.shuffle(stream.rng_mut());
}

/// Provider of uniform triples in `[0, 1)`; consumers clamp before inverting.
pub trait UniformSource {
    fn next_uniform3(&mut self) -> [f64; 3];
}

impl UniformSource for PseudoStream {
    fn next_uniform3(&mut self) -> [f64; 3] {
        [self.uniform(), self.uniform(), self.uniform()]
    }
}

impl UniformSource for SobolGenerator {
    fn next_uniform3(&mut self) -> [f64; 3] {
        let mut p = [0.0; 3];
        self.next_point(&mut p).expect("Sobol' index space exhausted");
        p
    }
}
