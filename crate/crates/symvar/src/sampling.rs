//! Seeded pseudo-random and low-discrepancy sources.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// splitmix64 step, used to derive independent stream seeds.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Kronecker sequence with generalized golden-ratio increments, pushed
/// through the inverse normal CDF. A seeded Cranley-Patterson shift makes
/// different seeds give different but equally well spread point sets.
pub struct QuasiNormal {
    alpha: Vec<f64>,
    shift: Vec<f64>,
    k: u64,
    normal: Normal,
}

impl QuasiNormal {
    pub fn new(dim: usize, seed: u64) -> Self {
        let d = dim.max(1);
        let mut phi = 2.0f64;
        for _ in 0..64 {
            phi = (1.0 + phi).powf(1.0 / (d as f64 + 1.0));
        }
        let alpha = (0..d).map(|j| (1.0 / phi).powi(j as i32 + 1).fract()).collect();
        let mut r = rng(seed);
        let shift = (0..d).map(|_| r.gen::<f64>()).collect();
        QuasiNormal {
            alpha,
            shift,
            k: 0,
            normal: Normal::new(0.0, 1.0).expect("standard normal"),
        }
    }

    pub fn next_uniform(&mut self) -> Vec<f64> {
        self.k += 1;
        let k = self.k as f64;
        self.alpha
            .iter()
            .zip(&self.shift)
            .map(|(a, s)| (s + k * a).fract())
            .collect()
    }

    pub fn next_gaussian(&mut self) -> Vec<f64> {
        self.next_uniform()
            .into_iter()
            .map(|p| self.normal.inverse_cdf(p.clamp(1e-12, 1.0 - 1e-12)))
            .collect()
    }
}

pub fn gaussian_vec(r: &mut SeededRng, n: usize) -> Vec<f64> {
    // Box-Muller keeps the dependency surface to rand itself.
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let u1: f64 = r.gen::<f64>().max(1e-300);
        let u2: f64 = r.gen();
        let rad = (-2.0 * u1.ln()).sqrt();
        out.push(rad * (2.0 * std::f64::consts::PI * u2).cos());
        if out.len() < n {
            out.push(rad * (2.0 * std::f64::consts::PI * u2).sin());
        }
    }
    out
}

pub fn uniform_vec(r: &mut SeededRng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(lo..hi)).collect()
}
