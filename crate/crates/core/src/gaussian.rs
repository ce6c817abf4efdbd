//! Gaussian measures, empirical fits and the eigenbasis view.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::spectra::{self, check_finite, check_square, symmetrize};

/// Ridge added to fitted covariances unless the caller overrides it.
pub const DEFAULT_RIDGE: f64 = 1e-6;

/// Symmetry tolerance used when accepting a covariance from the outside.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// PSD tolerance for covariances.
pub const PSD_TOL: f64 = 1e-8;

/// `𝒩(mean, cov)` with `cov` symmetric PSD.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl Gaussian {
    /// Validates shapes, finiteness, symmetry (within [`SYMMETRY_TOL`], then
    /// symmetrised) and PSD-ness (within [`PSD_TOL`]).
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        check_square(&cov, "covariance")?;
        if mean.len() != cov.nrows() {
            return Err(Error::Dimension(format!(
                "mean has length {} but covariance is {}x{}",
                mean.len(),
                cov.nrows(),
                cov.ncols()
            )));
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("mean has non-finite entries".into()));
        }
        check_finite(&cov, "covariance")?;
        let asym = (&cov - cov.transpose()).amax();
        let scale = cov.amax().max(1.0);
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::InvalidInput(format!("covariance is not symmetric (max asymmetry {asym:e})")));
        }
        let mut cov = symmetrize(&cov);
        let vals = spectra::sym_eigenvalues(&cov)?;
        if let (Some(&max), Some(&min)) = (vals.as_slice().first(), vals.as_slice().last()) {
            if min < -PSD_TOL * max.max(1.0) {
                return Err(Error::NotPsd { min_eig: min, max_eig: max });
            }
            // accepted but beyond round-off: project onto the PSD cone
            if min < -spectra::PSD_CLAMP_TOL * max.max(0.0) {
                cov = spectra::sym_eig(&cov)?.map_eigenvalues(|l| l.max(0.0));
            }
        }
        Ok(Self { mean, cov })
    }

    pub fn centered(cov: DMatrix<f64>) -> Result<Self> {
        let d = cov.nrows();
        Self::new(DVector::zeros(d), cov)
    }

    pub fn from_diagonal(mean: &[f64], variances: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(mean), DMatrix::from_diagonal(&DVector::from_column_slice(variances)))
    }

    /// 1-d Gaussian with mean `m` and variance `var`.
    pub fn univariate(m: f64, var: f64) -> Result<Self> {
        Self::from_diagonal(&[m], &[var])
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn into_parts(self) -> (DVector<f64>, DMatrix<f64>) {
        (self.mean, self.cov)
    }

    pub fn is_centered(&self, tol: f64) -> bool {
        self.mean.norm() <= tol
    }
}

/// Mean and covariance of the rows of `samples` (divide-by-n) plus `ridge·I`.
pub fn fit_gaussian(samples: &DMatrix<f64>, ridge: f64) -> Result<Gaussian> {
    let (n, d) = samples.shape();
    if n == 0 {
        return Err(Error::EmptyInput("no samples".into()));
    }
    if d == 0 {
        return Err(Error::EmptyInput("samples have zero columns".into()));
    }
    if !(ridge >= 0.0) || !ridge.is_finite() {
        return Err(Error::InvalidInput(format!("ridge must be non-negative, got {ridge}")));
    }
    check_finite(samples, "samples")?;
    let mean: DVector<f64> = samples.row_mean().transpose();
    let mut centered = samples.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let mut cov = centered.transpose() * &centered / n as f64;
    for i in 0..d {
        cov[(i, i)] += ridge;
    }
    Gaussian::new(mean, symmetrize(&cov))
}

/// Eigenbasis view of a Gaussian: `Σ = Q diag(λ) Qᵀ`, `m̃ = Qᵀ m`,
/// `η = diag(λ)^{1/2} m̃`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralForm {
    /// Non-negative, non-increasing.
    pub lambdas: DVector<f64>,
    pub q: DMatrix<f64>,
    pub m_tilde: DVector<f64>,
    pub eta: DVector<f64>,
}

impl SpectralForm {
    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    pub fn sqrt_lambdas(&self) -> DVector<f64> {
        self.lambdas.map(f64::sqrt)
    }

    pub fn lambda_diag(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.lambdas)
    }

    pub fn is_centered(&self) -> bool {
        self.m_tilde.iter().all(|&v| v == 0.0)
    }
}

pub fn spectral_form(g: &Gaussian) -> Result<SpectralForm> {
    let decomp = spectra::sym_eig(g.cov())?;
    let lambdas = decomp.eigenvalues.map(|l| l.max(0.0));
    let q = decomp.eigenvectors;
    let m_tilde = q.transpose() * g.mean();
    let eta = DVector::from_fn(lambdas.len(), |k, _| lambdas[k].sqrt() * m_tilde[k]);
    Ok(SpectralForm { lambdas, q, m_tilde, eta })
}

/// Embeds `g` into `d_target` dimensions by appending zero mean entries and
/// zero covariance rows/columns.
pub fn pad_to_dim(g: &Gaussian, d_target: usize) -> Result<Gaussian> {
    let d = g.dim();
    if d_target < d {
        return Err(Error::Dimension(format!("cannot pad a {d}-dimensional Gaussian down to {d_target}")));
    }
    if d_target == d {
        return Ok(g.clone());
    }
    let mean = g.mean().clone().resize_vertically(d_target, 0.0);
    let cov = g.cov().clone().resize(d_target, d_target, 0.0);
    Ok(Gaussian { mean, cov })
}

/// Zero-pads a vector to `len` entries.
pub(crate) fn pad_vector(v: &DVector<f64>, len: usize) -> DVector<f64> {
    if v.len() >= len {
        v.clone()
    } else {
        v.clone().resize_vertically(len, 0.0)
    }
}

/// Gaussians with non-negative weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedCollection {
    gaussians: Vec<Gaussian>,
    weights: Vec<f64>,
}

impl WeightedCollection {
    pub const WEIGHT_SUM_TOL: f64 = 1e-12;

    pub fn new(gaussians: Vec<Gaussian>, weights: Vec<f64>) -> Result<Self> {
        if gaussians.is_empty() {
            return Err(Error::EmptyInput("collection has no Gaussians".into()));
        }
        if gaussians.len() != weights.len() {
            return Err(Error::InvalidInput(format!("{} Gaussians but {} weights", gaussians.len(), weights.len())));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidInput("weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > Self::WEIGHT_SUM_TOL {
            return Err(Error::InvalidInput(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self { gaussians, weights })
    }

    pub fn uniform(gaussians: Vec<Gaussian>) -> Result<Self> {
        let n = gaussians.len();
        let w = if n == 0 { 0.0 } else { 1.0 / n as f64 };
        Self::new(gaussians, vec![w; n])
    }

    pub fn gaussians(&self) -> &[Gaussian] {
        &self.gaussians
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.gaussians.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaussians.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Gaussian, f64)> {
        self.gaussians.iter().zip(self.weights.iter().copied())
    }

    /// Common dimension, or a dimension error when members differ.
    pub fn common_dim(&self) -> Result<usize> {
        common_dim(&self.gaussians)
    }
}

pub(crate) fn common_dim(gaussians: &[Gaussian]) -> Result<usize> {
    let d = gaussians.first().map(Gaussian::dim).unwrap_or(0);
    if let Some(bad) = gaussians.iter().find(|g| g.dim() != d) {
        return Err(Error::Dimension(format!("expected a common dimension {d}, found {}", bad.dim())));
    }
    Ok(d)
}
