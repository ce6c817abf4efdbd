//! Quadratic-cost optimal transport between Gaussians (Bures-Wasserstein).
//!
//! For `μ_i = 𝒩(m_i, Σ_i)`:
//!
//! ```text
//! W2²(μ1, μ2) = ‖m1 − m2‖² + tr(Σ1 + Σ2 − 2 (Σ1^{1/2} Σ2 Σ1^{1/2})^{1/2})
//! T(x)        = m2 + A (x − m1),  A = Σ1^{-1/2} (Σ1^{1/2} Σ2 Σ1^{1/2})^{1/2} Σ1^{-1/2}
//! ```

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gaussian::{Gaussian, WeightedCollection};
use crate::spectra::{self, symmetrize};

/// `T(x) = matrix · (x − pivot) + offset`. The matrix may be rectangular
/// (maps between spaces of different dimension).
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub matrix: DMatrix<f64>,
    pub pivot: DVector<f64>,
    pub offset: DVector<f64>,
}

impl AffineMap {
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * (x - &self.pivot) + &self.offset
    }

    /// Law of `T(X)` for `X ~ g`.
    pub fn push_forward(&self, g: &Gaussian) -> Result<Gaussian> {
        if g.dim() != self.matrix.ncols() {
            return Err(Error::Dimension(format!(
                "map expects dimension {}, Gaussian has {}",
                self.matrix.ncols(),
                g.dim()
            )));
        }
        let cov = symmetrize(&(&self.matrix * g.cov() * self.matrix.transpose()));
        Gaussian::new(self.apply(g.mean()), cov)
    }
}

fn same_dim(g1: &Gaussian, g2: &Gaussian) -> Result<()> {
    if g1.dim() != g2.dim() {
        return Err(Error::Dimension(format!("Gaussians live in dimensions {} and {}", g1.dim(), g2.dim())));
    }
    Ok(())
}

/// `tr((Σ1^{1/2} Σ2 Σ1^{1/2})^{1/2})`, the optimal cross-covariance trace.
pub fn fidelity_trace(cov1: &DMatrix<f64>, cov2: &DMatrix<f64>) -> Result<f64> {
    let r1 = spectra::sqrt_psd(cov1)?;
    let middle = symmetrize(&(&r1 * cov2 * &r1));
    let vals = spectra::sym_eigenvalues(&middle)?;
    Ok(vals.iter().map(|v| v.max(0.0).sqrt()).sum())
}

pub fn bw_distance_squared(g1: &Gaussian, g2: &Gaussian) -> Result<f64> {
    same_dim(g1, g2)?;
    let mean_term = (g1.mean() - g2.mean()).norm_squared();
    let cov_term = g1.cov().trace() + g2.cov().trace() - 2.0 * fidelity_trace(g1.cov(), g2.cov())?;
    Ok(mean_term + cov_term.max(0.0))
}

pub fn bw_distance(g1: &Gaussian, g2: &Gaussian) -> Result<f64> {
    Ok(bw_distance_squared(g1, g2)?.sqrt())
}

/// Optimal (Brenier) map from `g1` to `g2`; `Σ1` must be positive definite.
pub fn bw_map(g1: &Gaussian, g2: &Gaussian) -> Result<AffineMap> {
    same_dim(g1, g2)?;
    let decomp = spectra::sym_eig(g1.cov())?;
    spectra::require_pd(&decomp)?;
    let r1 = decomp.map_eigenvalues(f64::sqrt);
    let r1_inv = decomp.map_eigenvalues(|l| 1.0 / l.sqrt());
    let middle = spectra::sqrt_psd(&symmetrize(&(&r1 * g2.cov() * &r1)))?;
    let matrix = symmetrize(&(&r1_inv * middle * &r1_inv));
    Ok(AffineMap { matrix, pivot: g1.mean().clone(), offset: g2.mean().clone() })
}

/// Law of `((1 − t)·Id + t·T)(X)` for `X ~ g1`.
pub fn displacement_interpolation(g1: &Gaussian, map: &AffineMap, t: f64) -> Result<Gaussian> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Range(format!("interpolation time {t} outside [0, 1]")));
    }
    let d = g1.dim();
    if map.matrix.shape() != (d, d) || map.pivot.len() != d {
        return Err(Error::Dimension(format!(
            "map of shape {:?} does not match a {d}-dimensional source",
            map.matrix.shape()
        )));
    }
    let mean = g1.mean() * (1.0 - t) + map.apply(g1.mean()) * t;
    let m = DMatrix::identity(d, d) * (1.0 - t) + &map.matrix * t;
    let cov = symmetrize(&(&m * g1.cov() * m.transpose()));
    Gaussian::new(mean, cov)
}

pub const BARYCENTER_TOL: f64 = 1e-10;
pub const BARYCENTER_MAX_ITERS: usize = 500;

/// Relative residual `‖Σ − Σ_ν w_ν (Σ^{1/2} Σ_ν Σ^{1/2})^{1/2}‖_F / ‖Σ‖_F` of the
/// barycenter fixed-point equation.
pub fn w2_barycenter_residual(col: &WeightedCollection, cov: &DMatrix<f64>) -> Result<f64> {
    let root = spectra::sqrt_psd(cov)?;
    let image = fixed_point_image(col, &root)?;
    Ok((cov - image).norm() / cov.norm().max(f64::MIN_POSITIVE))
}

fn fixed_point_image(col: &WeightedCollection, root: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = root.nrows();
    let mut acc = DMatrix::zeros(d, d);
    for (g, w) in col.iter() {
        if w == 0.0 {
            continue;
        }
        let inner = symmetrize(&(root * g.cov() * root));
        acc += spectra::sqrt_psd(&inner)? * w;
    }
    Ok(symmetrize(&acc))
}

/// Fixed-point 2-Wasserstein barycenter, started from the weighted arithmetic
/// mean of the covariances.
pub fn w2_barycenter_fixed_point(col: &WeightedCollection, tol: f64, max_iters: usize) -> Result<Gaussian> {
    let d = col.common_dim()?;
    for (i, g) in col.gaussians().iter().enumerate() {
        spectra::require_pd(&spectra::sym_eig(g.cov())?)
            .map_err(|e| Error::InvalidInput(format!("covariance {i} is not positive definite: {e}")))?;
    }
    let mut mean = DVector::zeros(d);
    let mut cov = DMatrix::zeros(d, d);
    for (g, w) in col.iter() {
        mean += g.mean() * w;
        cov += g.cov() * w;
    }
    let mut cov = symmetrize(&cov);
    let mut residual = f64::INFINITY;
    for _ in 0..=max_iters {
        let decomp = spectra::sym_eig(&cov)?;
        let root = decomp.map_eigenvalues(|l| l.max(0.0).sqrt());
        let image = fixed_point_image(col, &root)?;
        residual = (&cov - &image).norm() / cov.norm().max(f64::MIN_POSITIVE);
        if residual <= tol {
            return Gaussian::new(mean, cov);
        }
        spectra::require_pd(&decomp)?;
        let root_inv = decomp.map_eigenvalues(|l| 1.0 / l.sqrt());
        cov = symmetrize(&(&root_inv * &image * &image * &root_inv));
    }
    Err(Error::Convergence { iterations: max_iters, residual })
}
