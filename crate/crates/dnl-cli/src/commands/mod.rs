//! One module per subcommand. Every command reads its section of the
//! config, derives all randomness from the global seed, writes its CSV
//! outputs and a run manifest into the output directory, and returns a
//! typed summary for in-process callers.

pub mod forward_converge;
pub mod gradcheck;
pub mod kernel_check;
pub mod regularizer_converge;
pub mod solver_residual;
pub mod train_gamma;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use dnl_core::kernel::TransformParams;
use dnl_core::linalg::{Matrix, Vector};

pub(crate) fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn random_matrix(n: usize, rng: &mut ChaCha8Rng, scale: f64) -> Matrix {
    Matrix::new(n, (0..n * n).map(|_| rng.gen_range(-scale..scale)).collect())
}

pub(crate) fn random_vector(n: usize, rng: &mut ChaCha8Rng, scale: f64) -> Vector {
    Vector::new((0..n).map(|_| rng.gen_range(-scale..scale)).collect())
}

pub(crate) fn random_transform(n: usize, rng: &mut ChaCha8Rng, scale: f64) -> TransformParams {
    TransformParams::new(
        random_matrix(n, rng, scale),
        random_matrix(n, rng, scale),
        random_matrix(n, rng, scale),
    )
}
