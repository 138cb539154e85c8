//! Seeded sampling and input-keyed deterministic noise.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::WeightedNorm;
use crate::linalg::{Scalar, Vector};

/// Radii applied to unit-ball samples, cycled by sample index.
pub const SCALE_LADDER: [f64; 4] = [0.25, 1.0, 4.0, 16.0];

/// Grid on which inputs are rounded before keying noise.
pub const QUANTIZATION: f64 = 1_048_576.0; // 2^20

pub struct SampleRng {
    inner: ChaCha8Rng,
}

impl SampleRng {
    pub fn new(seed: u64) -> Self {
        Self { inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Uniform in `[-1, 1)`.
    pub fn symmetric(&mut self) -> f64 {
        self.inner.random_range(-1.0..1.0)
    }

    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn index(&mut self, bound: usize) -> usize {
        self.inner.random_range(0..bound)
    }

    pub fn complex(&mut self) -> Scalar {
        Complex64::new(self.symmetric(), self.symmetric())
    }

    /// Uniform in the closed unit disk.
    pub fn unit_disk(&mut self) -> Scalar {
        loop {
            let z = self.complex();
            if z.norm_sqr() <= 1.0 {
                return z;
            }
        }
    }

    /// Entries with real and imaginary parts uniform in `[-1, 1)`.
    pub fn complex_vector(&mut self, dim: usize) -> Vector {
        Vector::from_fn(dim, |_, _| self.complex())
    }

    /// A point of norm exactly `radius` (up to rounding), or `0` in dimension 0.
    pub fn sphere_point(&mut self, norm: &WeightedNorm, radius: f64) -> Vector {
        let dim = norm.dim();
        if dim == 0 {
            return Vector::zeros(0);
        }
        loop {
            let v = self.complex_vector(dim);
            let r = norm.norm(&v);
            if r > 1e-3 {
                return v * Complex64::new(radius / r, 0.0);
            }
        }
    }

    /// A point of the ball of radius `radius`, radial part uniform in `[0, radius]`.
    pub fn ball_point(&mut self, norm: &WeightedNorm, radius: f64) -> Vector {
        let t = self.uniform();
        self.sphere_point(norm, radius * t)
    }

    /// Sample `k` of a scale-ladder sweep: a ball point of radius `SCALE_LADDER[k % 4]`.
    pub fn ladder_point(&mut self, norm: &WeightedNorm, k: usize) -> Vector {
        self.ball_point(norm, SCALE_LADDER[k % SCALE_LADDER.len()])
    }
}

/// 64-bit finalizer from SplitMix64.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn quantize(x: f64) -> u64 {
    let q = (x * QUANTIZATION).round();
    // fold -0.0 into 0.0
    if q == 0.0 {
        0
    } else {
        q.to_bits()
    }
}

/// Key derived from `seed` and the quantized coordinates of `v`.
pub fn input_key(seed: u64, stream: u64, v: &Vector) -> u64 {
    let mut h = mix64(seed ^ mix64(stream));
    for z in v.iter() {
        h = mix64(h ^ quantize(z.re));
        h = mix64(h ^ quantize(z.im).rotate_left(17));
    }
    h
}

/// A generator that depends only on `(seed, stream, quantized v)`.
pub fn keyed_rng(seed: u64, stream: u64, v: &Vector) -> SampleRng {
    SampleRng::new(input_key(seed, stream, v))
}
