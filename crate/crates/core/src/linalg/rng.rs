//! Seeded, splittable random streams.
//!
//! Every stream is a ChaCha8 keystream keyed from a 64-bit seed, so identical
//! seeds give identical samples on every platform. Child streams are keyed by
//! mixing the parent seed with a label hash (FNV-1a, then the SplitMix64
//! finalizer); they depend only on the parent's seed, never on how much of
//! the parent stream has been consumed.

use std::f64::consts::TAU;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Matrix;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Debug)]
pub struct RngState {
    seed: u64,
    stream: ChaCha8Rng,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            stream: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child stream for `label`.
    pub fn derive(&self, label: &str) -> RngState {
        RngState::new(splitmix64(self.seed ^ fnv1a(label.as_bytes())))
    }

    /// Independent child stream for an integer label (seed index, trial id...).
    pub fn derive_index(&self, index: u64) -> RngState {
        RngState::new(splitmix64(splitmix64(self.seed).wrapping_add(index.wrapping_mul(GOLDEN_GAMMA))))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.stream.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on the open interval `(0, 1)`.
    #[inline]
    pub fn open_unit(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n`. `n` must be positive.
    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Pair of independent standard normals (Box–Muller).
    #[inline]
    pub fn normal_pair(&mut self) -> (f64, f64) {
        let u1 = self.open_unit();
        let u2 = self.open_unit();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        (r * c, r * s)
    }

    pub fn normal(&mut self) -> f64 {
        self.normal_pair().0
    }

    pub fn fill_normal(&mut self, out: &mut [f64], std: f64) {
        let mut chunks = out.chunks_exact_mut(2);
        for pair in &mut chunks {
            let (a, b) = self.normal_pair();
            pair[0] = a * std;
            pair[1] = b * std;
        }
        if let [last] = chunks.into_remainder() {
            *last = self.normal_pair().0 * std;
        }
    }

    pub fn fill_uniform(&mut self, out: &mut [f64], bound: f64) {
        for v in out {
            *v = bound * (2.0 * self.uniform() - 1.0);
        }
    }

    /// `k` distinct indices from `0..n`, in sampling order (partial Fisher–Yates).
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "cannot sample {k} of {n}");
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}

/// `rows × cols` matrix of i.i.d. `N(0, std²)` entries.
pub fn sample_gaussian(rng: &mut RngState, rows: usize, cols: usize, std: f64) -> Matrix {
    assert!(std >= 0.0, "negative standard deviation");
    let mut m = Matrix::zeros(rows, cols);
    if std > 0.0 {
        rng.fill_normal(m.data_mut(), std);
    }
    m
}

/// `rows × cols` matrix of i.i.d. `U(-bound, bound)` entries.
pub fn sample_uniform(rng: &mut RngState, rows: usize, cols: usize, bound: f64) -> Matrix {
    assert!(bound >= 0.0, "negative bound");
    let mut m = Matrix::zeros(rows, cols);
    if bound > 0.0 {
        rng.fill_uniform(m.data_mut(), bound);
    }
    m
}
