//! Seeded random generation shared by the solvers, benchmarks and tests.
//!
//! Everything goes through a `ChaCha8Rng` seeded from a `u64`, so identical
//! seeds give bit-identical draws on every platform.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn standard_normal(rng: &mut SeededRng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn standard_normal_vector(rng: &mut SeededRng, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| StandardNormal.sample(rng))
}

/// `rows × cols` matrix with orthonormal columns (`rows ≥ cols`): the Q factor
/// of a Gaussian matrix, with the sign of each column fixed so `R_ii > 0`.
pub fn haar_orthonormal(rng: &mut SeededRng, rows: usize, cols: usize) -> DMatrix<f64> {
    assert!(rows >= cols, "need rows >= cols");
    qf(standard_normal(rng, rows, cols))
}

/// Thin Q factor with positive `R` diagonal.
pub(crate) fn qf(m: DMatrix<f64>) -> DMatrix<f64> {
    let qr = m.qr();
    let r = qr.r();
    let mut q = qr.q();
    for (k, mut col) in q.column_iter_mut().enumerate() {
        if r[(k, k)] < 0.0 {
            col.neg_mut();
        }
    }
    q
}

/// `A Aᵀ + shift·I` with standard normal `A`.
pub fn wishart_like(rng: &mut SeededRng, d: usize, shift: f64) -> DMatrix<f64> {
    let a = standard_normal(rng, d, d);
    let mut s = &a * a.transpose();
    for i in 0..d {
        s[(i, i)] += shift;
    }
    crate::spectra::symmetrize(&s)
}
