//! Seeded random states and local operators.
//!
//! Every generator takes a `u64` seed and builds its own ChaCha stream, so the
//! same seed always yields bit-identical output.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use super::matrix::ComplexMatrix;
use super::state::{DensityMatrix, PureState};
use crate::error::{Error, Result};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random pure state drawn from `rng`.
pub fn sample_pure<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<PureState> {
    let amps = (0..1usize << n).map(|_| complex_gaussian(rng)).collect();
    PureState::normalized(n, amps)
}

/// Mixture of `rank` Haar pure states with flat-Dirichlet weights.
pub fn sample_mixed<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> Result<DensityMatrix> {
    let max = 1usize << n;
    if rank == 0 || rank > max {
        return Err(Error::BadRank { rank, max });
    }
    let states = (0..rank).map(|_| sample_pure(n, rng)).collect::<Result<Vec<_>>>()?;
    // Dirichlet(1, …, 1) as normalized Exp(1) draws.
    let raw: Vec<f64> = (0..rank).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = raw.iter().sum();
    let mut acc = ComplexMatrix::zeros(max);
    for (w, psi) in raw.iter().zip(&states) {
        acc = &acc + &ComplexMatrix::outer(psi.amplitudes()).scale_real(w / total);
    }
    DensityMatrix::new(n, acc)
}

/// Haar-uniform SU(2) element built from a uniformly random unit quaternion.
pub fn sample_su2<R: Rng + ?Sized>(rng: &mut R) -> ComplexMatrix {
    let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
    let norm = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let [a, b, c, d] = q.map(|x| x / norm);
    ComplexMatrix::mat2(
        Complex64::new(a, b),
        Complex64::new(c, d),
        Complex64::new(-c, d),
        Complex64::new(a, -b),
    )
}

/// Complex-Gaussian 2×2 matrix divided by the principal square root of its determinant.
pub fn sample_sl2c<R: Rng + ?Sized>(rng: &mut R) -> ComplexMatrix {
    loop {
        let m = ComplexMatrix::mat2(
            complex_gaussian(rng),
            complex_gaussian(rng),
            complex_gaussian(rng),
            complex_gaussian(rng),
        );
        let det = m.det2();
        if det.norm() < 1e-6 {
            continue;
        }
        return m.scale(det.sqrt().inv());
    }
}

pub fn random_pure(n: usize, seed: u64) -> Result<PureState> {
    sample_pure(n, &mut rng_from_seed(seed))
}

pub fn random_mixed(n: usize, rank: usize, seed: u64) -> Result<DensityMatrix> {
    sample_mixed(n, rank, &mut rng_from_seed(seed))
}

pub fn random_su2(seed: u64) -> ComplexMatrix {
    sample_su2(&mut rng_from_seed(seed))
}

pub fn random_sl2c(seed: u64) -> ComplexMatrix {
    sample_sl2c(&mut rng_from_seed(seed))
}
