//! Shared fixtures for the integration suites.
#![allow(dead_code)]

use dnl_core::discrete::{Activation, DiscreteParams, NetConfig};
use dnl_core::kernel::KernelFamily;
use dnl_core::linalg::{Matrix, Vector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(n: usize, rng: &mut ChaCha8Rng, scale: f64) -> Matrix {
    Matrix::new(n, (0..n * n).map(|_| rng.gen_range(-scale..scale)).collect())
}

pub fn random_vector(n: usize, rng: &mut ChaCha8Rng, scale: f64) -> Vector {
    Vector::new((0..n).map(|_| rng.gen_range(-scale..scale)).collect())
}

pub fn seeded_params(n: usize, layers: usize, scale: f64, seed: u64) -> DiscreteParams {
    DiscreteParams::random_uniform(n, layers, scale, &mut rng(seed))
}

/// Rotate through every kernel/activation combination.
pub fn mixed_cfg(index: usize, n: usize, layers: usize) -> NetConfig {
    let kernel = KernelFamily::ALL[index % 3];
    let activation = Activation::ALL[(index / 3) % 3];
    NetConfig::new(kernel, activation, n, layers)
}
