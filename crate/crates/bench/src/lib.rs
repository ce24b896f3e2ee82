//! Benchmark fixtures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tnpur::reduction::{build_reduction, ReductionMode, ZulcInstance};
use tnpur::scalar::c64;
use tnpur::{AnyTensor, Matrix, MpsTensor, PurificationTensor, C64};

fn entries(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix<C64> {
    Matrix::from_fn(rows, cols, |_, _| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

pub fn random_tensor(seed: u64, d: usize, bond: usize) -> MpsTensor<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    MpsTensor::new((0..d).map(|_| entries(&mut rng, bond, bond)).collect()).unwrap()
}

pub fn random_purification(seed: u64, d: usize, d_env: usize, bond: usize) -> PurificationTensor<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PurificationTensor::new(d, d_env, (0..d * d_env).map(|_| entries(&mut rng, bond, bond)).collect()).unwrap()
}

/// Reduction tensor of the single-matrix instance with a negative word at length 2.
pub fn negative_reduction() -> AnyTensor {
    let z = ZulcInstance::single([[0, 1, 0], [0, 0, 0], [0, 0, 0]]);
    build_reduction(&z, ReductionMode::Rational).tensor
}

/// Reduction tensor of the identity instance, which has no negative word.
pub fn identity_reduction() -> AnyTensor {
    let z = ZulcInstance::uniform([[1, 0, 0], [0, 1, 0], [0, 0, 1]]);
    build_reduction(&z, ReductionMode::Rational).tensor
}
