//! Symmetric-matrix kernels: eigendecomposition with a deterministic basis,
//! PSD square roots and PSD tests.
//!
//! Eigenvalues are always returned in non-increasing order. Eigenvectors are
//! canonicalised so that repeated runs (and different platforms) agree:
//!
//! 1. inside a cluster of numerically equal eigenvalues the basis is rebuilt
//!    by Gram-Schmidt on the projected coordinate axes, so an eigenspace that
//!    contains coordinate axes is reported with those axes;
//! 2. every eigenvector is signed so that its largest-magnitude entry is
//!    positive (first such entry on ties).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative threshold below which negative eigenvalues are treated as round-off.
pub const PSD_CLAMP_TOL: f64 = 1e-10;

/// Relative spread under which neighbouring eigenvalues are treated as equal.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    /// Sorted non-increasing.
    pub eigenvalues: DVector<f64>,
    /// Orthogonal; column `k` pairs with `eigenvalues[k]`.
    pub eigenvectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `Q diag(f(λ)) Qᵀ`.
    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let q = &self.eigenvectors;
        let mut scaled = q.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= f(self.eigenvalues[k]);
        }
        symmetrize(&(scaled * q.transpose()))
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.map_eigenvalues(|l| l)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        if self.dim() == 0 {
            0.0
        } else {
            self.eigenvalues[0]
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.dim() == 0 {
            0.0
        } else {
            self.eigenvalues[self.dim() - 1]
        }
    }
}

/// `(M + Mᵀ) / 2`, exactly symmetric.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = m.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

pub fn check_square(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!("{what} must be square, got {}x{}", m.nrows(), m.ncols())));
    }
    Ok(())
}

pub fn check_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("{what} has non-finite entries")));
    }
    Ok(())
}

/// Eigendecomposition of the symmetric part of `m`, sorted and canonicalised.
pub fn sym_eig(m: &DMatrix<f64>) -> Result<SpectralDecomposition> {
    check_square(m, "matrix")?;
    check_finite(m, "matrix")?;
    let n = m.nrows();
    if n == 0 {
        return Ok(SpectralDecomposition { eigenvalues: DVector::zeros(0), eigenvectors: DMatrix::zeros(0, 0) });
    }
    let sym = symmetrize(m);
    let eig = sym.symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }

    let scale = eigenvalues.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let tie = TIE_TOL * scale.max(f64::MIN_POSITIVE);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && eigenvalues[end - 1] - eigenvalues[end] <= tie {
            end += 1;
        }
        if end - start > 1 {
            canonical_cluster_basis(&mut eigenvectors, start, end);
        }
        start = end;
    }
    for mut col in eigenvectors.column_iter_mut() {
        fix_sign(&mut col);
    }
    Ok(SpectralDecomposition { eigenvalues, eigenvectors })
}

/// Replace columns `start..end` by Gram-Schmidt applied to `P e_1, P e_2, ...`
/// where `P` projects onto their span.
fn canonical_cluster_basis(vectors: &mut DMatrix<f64>, start: usize, end: usize) {
    let n = vectors.nrows();
    let block = vectors.columns(start, end - start).into_owned();
    let projector = &block * block.transpose();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(end - start);
    for axis in 0..n {
        if basis.len() == end - start {
            break;
        }
        let mut v: DVector<f64> = projector.column(axis).into_owned();
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&v);
                v.axpy(-c, b, 1.0);
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            basis.push(v / norm);
        }
    }
    if basis.len() == end - start {
        for (k, b) in basis.into_iter().enumerate() {
            vectors.set_column(start + k, &b);
        }
    }
}

fn fix_sign<S>(col: &mut nalgebra::Matrix<f64, nalgebra::Dyn, nalgebra::U1, S>)
where
    S: nalgebra::StorageMut<f64, nalgebra::Dyn, nalgebra::U1>,
{
    let max_mag = col.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if max_mag == 0.0 {
        return;
    }
    let lead = col.iter().copied().find(|v| v.abs() >= max_mag * (1.0 - 1e-10)).unwrap_or(0.0);
    if lead < 0.0 {
        col.neg_mut();
    }
}

/// Eigenvalues of a symmetric matrix, non-increasing.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    check_square(m, "matrix")?;
    check_finite(m, "matrix")?;
    let mut vals: Vec<f64> = symmetrize(m).symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    Ok(DVector::from_vec(vals))
}

/// Verifies PSD-ness up to round-off and clamps the tiny negative eigenvalues.
pub fn clamp_psd(decomp: &SpectralDecomposition) -> Result<DVector<f64>> {
    let max = decomp.max_eigenvalue().max(0.0);
    let min = decomp.min_eigenvalue();
    if min < -PSD_CLAMP_TOL * max || (max == 0.0 && min < 0.0) {
        return Err(Error::NotPsd { min_eig: min, max_eig: decomp.max_eigenvalue() });
    }
    Ok(decomp.eigenvalues.map(|l| l.max(0.0)))
}

/// Symmetric PSD square root.
pub fn sqrt_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let decomp = sym_eig(m)?;
    clamp_psd(&decomp)?;
    Ok(decomp.map_eigenvalues(|l| l.max(0.0).sqrt()))
}

/// `M^{-1/2}` for a positive definite `M`; errors when the smallest eigenvalue
/// is below `1e-10·λmax`.
pub fn inv_sqrt_pd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let decomp = sym_eig(m)?;
    require_pd(&decomp)?;
    Ok(decomp.map_eigenvalues(|l| 1.0 / l.sqrt()))
}

pub fn require_pd(decomp: &SpectralDecomposition) -> Result<()> {
    let max = decomp.max_eigenvalue();
    let min = decomp.min_eigenvalue();
    let threshold = PSD_CLAMP_TOL * max.max(0.0);
    if !(min > threshold) || max <= 0.0 {
        return Err(Error::NotInvertible { eigenvalue: min, threshold });
    }
    Ok(())
}

/// True iff `λmin ≥ −tol·max(1, λmax)`.
pub fn is_psd(m: &DMatrix<f64>, tol: f64) -> bool {
    match sym_eigenvalues(m) {
        Ok(vals) if vals.is_empty() => true,
        Ok(vals) => {
            let max = vals[0];
            let min = vals[vals.len() - 1];
            min >= -tol * max.max(1.0)
        }
        Err(_) => false,
    }
}

/// Relative Frobenius distance `‖a − b‖ / max(‖b‖, tiny)`.
pub fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}
