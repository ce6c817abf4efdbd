//! Inner-product Gromov-Wasserstein (IGW) alignment between Gaussians.
//!
//! Write `Σ_i = Q_i Λ_i Q_iᵀ` (eigenvalues non-increasing), `m̃_i = Q_iᵀ m_i`
//! and `η_i = Λ_i^{1/2} m̃_i`. For `d1 ≥ d2`,
//!
//! ```text
//! γ     = max_{C ∈ St(d1, d2)}  tr(Λ1 C Λ2 Cᵀ) + 2 ⟨η1, C η2⟩
//! IGW²  = tr Λ1² + tr Λ2² + 2‖η1‖² + 2‖η2‖² + (‖m̃1‖² − ‖m̃2‖²)² − 2γ
//! ```
//!
//! Maximising the two terms of `γ` separately gives the analytic bounds
//!
//! ```text
//! ξ − 4‖η1‖‖η2‖  ≤  IGW²  ≤  ξ − 4⟨η1, η2⟩,
//! ξ = Σ_k (λ1k − λ2k)² + 2‖η1‖² + 2‖η2‖² + (‖m̃1‖² − ‖m̃2‖²)²
//! ```
//!
//! which coincide when the moment vectors are aligned. Spectra and moment
//! vectors of different lengths are zero-padded.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{pad_vector, spectral_form, Gaussian, SpectralForm, WeightedCollection};
use crate::manifold::{rgd_maximize, SolverConfig, StiefelObjective, StiefelPoint};
use crate::sampling;
use crate::spectra::{self, symmetrize};
use crate::transport::AffineMap;

/// Means with norm at most this are treated as zero.
pub const CENTER_TOL: f64 = 1e-12;

/// Angle tolerance `1 − cos θ` for aligned moment vectors.
pub const ALIGNMENT_TOL: f64 = 1e-10;

/// Eigenvalues at or below `SUPPORT_TOL·λmax` are outside the support when
/// inverting `Λ^{1/2}`.
pub const SUPPORT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IgwBounds {
    pub xi: f64,
    pub lower_sq: f64,
    pub upper_sq: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Which closed form produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClosedFormCase {
    Centered,
    Univariate,
    CoCentered,
}

#[derive(Debug, Clone)]
pub struct GammaSolution {
    /// Optimal frame for the ordered pair (larger dimension first).
    pub c: StiefelPoint,
    pub gamma: f64,
    /// Objective values of the winning run.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct IgwEstimate {
    pub distance: f64,
    pub solution: GammaSolution,
    pub bounds: IgwBounds,
    /// True when the inputs were swapped so the first has the larger dimension.
    pub swapped: bool,
}

/// Joint Gaussian `𝒩((m1; m2), [[Σ1, K], [Kᵀ, Σ2]])` and the map `T` whose
/// graph carries it.
#[derive(Debug, Clone)]
pub struct GaussianCoupling {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub cross: DMatrix<f64>,
    pub map: AffineMap,
}

/// `γ` objective on `St(d1, d2)` for two spectral forms with `d1 ≥ d2`.
#[derive(Debug, Clone)]
pub struct GammaObjective {
    lambda1: DVector<f64>,
    lambda2: DVector<f64>,
    eta1: DVector<f64>,
    eta2: DVector<f64>,
}

impl GammaObjective {
    pub fn new(s1: &SpectralForm, s2: &SpectralForm) -> Result<Self> {
        if s1.dim() < s2.dim() {
            return Err(Error::Dimension(format!(
                "first argument must have the larger dimension ({} < {})",
                s1.dim(),
                s2.dim()
            )));
        }
        Ok(Self {
            lambda1: s1.lambdas.clone(),
            lambda2: s2.lambdas.clone(),
            eta1: s1.eta.clone(),
            eta2: s2.eta.clone(),
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.lambda1.len(), self.lambda2.len())
    }
}

impl StiefelObjective for GammaObjective {
    fn value(&self, c: &DMatrix<f64>) -> f64 {
        let mut quad = 0.0;
        for b in 0..c.ncols() {
            for a in 0..c.nrows() {
                quad += self.lambda1[a] * self.lambda2[b] * c[(a, b)] * c[(a, b)];
            }
        }
        quad + 2.0 * self.eta1.dot(&(c * &self.eta2))
    }

    fn euclidean_gradient(&self, c: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(c.nrows(), c.ncols(), |a, b| {
            2.0 * (self.lambda1[a] * self.lambda2[b] * c[(a, b)] + self.eta1[a] * self.eta2[b])
        })
    }
}

/// `tr(Λ1 C Λ2 Cᵀ) + 2⟨η1, C η2⟩`; arguments are swapped (and `C` must be
/// `d2 × d1`) when `s1` has the smaller dimension.
pub fn gamma_objective(s1: &SpectralForm, s2: &SpectralForm, c: &StiefelPoint) -> Result<f64> {
    let (big, small) = if s1.dim() >= s2.dim() { (s1, s2) } else { (s2, s1) };
    if c.shape() != (big.dim(), small.dim()) {
        return Err(Error::Dimension(format!(
            "frame has shape {:?}, expected {:?}",
            c.shape(),
            (big.dim(), small.dim())
        )));
    }
    Ok(GammaObjective::new(big, small)?.value(c.matrix()))
}

/// The part of `IGW²` that does not depend on `C`.
fn constant_part(s1: &SpectralForm, s2: &SpectralForm) -> f64 {
    let mass = s1.m_tilde.norm_squared() - s2.m_tilde.norm_squared();
    s1.lambdas.norm_squared()
        + s2.lambdas.norm_squared()
        + 2.0 * s1.eta.norm_squared()
        + 2.0 * s2.eta.norm_squared()
        + mass * mass
}

fn padded_pair(a: &DVector<f64>, b: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    let n = a.len().max(b.len());
    (pad_vector(a, n), pad_vector(b, n))
}

/// `Σ_k (λ1k − λ2k)²` over zero-padded sorted spectra.
pub fn spectral_gap_sq(l1: &DVector<f64>, l2: &DVector<f64>) -> f64 {
    let (a, b) = padded_pair(l1, l2);
    (a - b).norm_squared()
}

pub fn bounds_from_spectral(s1: &SpectralForm, s2: &SpectralForm) -> IgwBounds {
    let mass = s1.m_tilde.norm_squared() - s2.m_tilde.norm_squared();
    let xi = spectral_gap_sq(&s1.lambdas, &s2.lambdas)
        + 2.0 * s1.eta.norm_squared()
        + 2.0 * s2.eta.norm_squared()
        + mass * mass;
    let (e1, e2) = padded_pair(&s1.eta, &s2.eta);
    let lower_sq = xi - 4.0 * e1.norm() * e2.norm();
    let upper_sq = xi - 4.0 * e1.dot(&e2);
    IgwBounds { xi, lower_sq, upper_sq, lower: lower_sq.max(0.0).sqrt(), upper: upper_sq.max(0.0).sqrt() }
}

pub fn igw_bounds(g1: &Gaussian, g2: &Gaussian) -> Result<IgwBounds> {
    Ok(bounds_from_spectral(&spectral_form(g1)?, &spectral_form(g2)?))
}

/// Sorted (non-increasing) eigenvalues of a covariance, negatives clamped.
pub fn sorted_spectrum(cov: &DMatrix<f64>) -> Result<DVector<f64>> {
    Ok(spectra::sym_eigenvalues(cov)?.map(|l| l.max(0.0)))
}

/// IGW distance between `𝒩(0, Σ1)` and `𝒩(0, Σ2)`: the ℓ² distance between
/// the zero-padded sorted spectra.
pub fn gbw_distance(cov1: &DMatrix<f64>, cov2: &DMatrix<f64>) -> Result<f64> {
    Ok(spectral_gap_sq(&sorted_spectrum(cov1)?, &sorted_spectrum(cov2)?).sqrt())
}

/// Moment vectors whose absolute values are parallel: flipping eigenvector
/// signs (an admissible diagonal frame) makes them parallel with a
/// non-negative ratio. A zero vector counts as aligned.
fn moments_aligned(eta1: &DVector<f64>, eta2: &DVector<f64>) -> bool {
    let (a, b) = padded_pair(eta1, eta2);
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 {
        return true;
    }
    let abs_dot: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x * y).abs()).sum();
    1.0 - abs_dot / (na * nb) <= ALIGNMENT_TOL
}

/// Closed-form IGW value when one applies, checked in the order: both
/// centered, both univariate, aligned moment vectors.
pub fn igw_closed_form_with_case(g1: &Gaussian, g2: &Gaussian) -> Result<Option<(ClosedFormCase, f64)>> {
    if g1.is_centered(CENTER_TOL) && g2.is_centered(CENTER_TOL) {
        return Ok(Some((ClosedFormCase::Centered, gbw_distance(g1.cov(), g2.cov())?)));
    }
    if g1.dim() == 1 && g2.dim() == 1 {
        let (m1, v1) = (g1.mean()[0], g1.cov()[(0, 0)].max(0.0));
        let (m2, v2) = (g2.mean()[0], g2.cov()[(0, 0)].max(0.0));
        let spread = v1.sqrt() * m1.abs() - v2.sqrt() * m2.abs();
        let sq = (v1 - v2).powi(2) + (m1 * m1 - m2 * m2).powi(2) + 2.0 * spread * spread;
        return Ok(Some((ClosedFormCase::Univariate, sq.max(0.0).sqrt())));
    }
    let s1 = spectral_form(g1)?;
    let s2 = spectral_form(g2)?;
    if moments_aligned(&s1.eta, &s2.eta) {
        return Ok(Some((ClosedFormCase::CoCentered, bounds_from_spectral(&s1, &s2).lower)));
    }
    Ok(None)
}

pub fn igw_closed_form(g1: &Gaussian, g2: &Gaussian) -> Result<Option<f64>> {
    Ok(igw_closed_form_with_case(g1, g2)?.map(|(_, v)| v))
}

/// Rectangular diagonal frame with entries `sign(η1k η2k)`; it attains the
/// trace term's maximum and the best mean term among diagonal frames.
fn sign_aligned_frame(s1: &SpectralForm, s2: &SpectralForm) -> Option<StiefelPoint> {
    let (d1, d2) = (s1.dim(), s2.dim());
    let mut c = DMatrix::identity(d1, d2);
    let mut flipped = false;
    for k in 0..d2 {
        if s1.eta[k] * s2.eta[k] < 0.0 {
            c[(k, k)] = -1.0;
            flipped = true;
        }
    }
    flipped.then(|| StiefelPoint::new(c).expect("signed identity is orthonormal"))
}

/// IGW distance from gradient ascent on `γ`.
///
/// Runs from the identity frame, from the sign-aligned diagonal frame (when
/// it differs) and from `cfg.restarts` random frames, keeping the best `γ`.
/// The returned distance always lies within [`igw_bounds`].
pub fn igw_distance_rgd(g1: &Gaussian, g2: &Gaussian, cfg: &SolverConfig) -> Result<IgwEstimate> {
    cfg.validate()?;
    let swapped = g1.dim() < g2.dim();
    let (a, b) = if swapped { (g2, g1) } else { (g1, g2) };
    let s1 = spectral_form(a)?;
    let s2 = spectral_form(b)?;
    let objective = GammaObjective::new(&s1, &s2)?;
    let (d1, d2) = objective.shape();

    let mut starts = vec![StiefelPoint::identity(d1, d2)];
    starts.extend(sign_aligned_frame(&s1, &s2));
    let mut rng = sampling::seeded(cfg.seed);
    starts.extend((0..cfg.restarts).map(|_| StiefelPoint::random(d1, d2, &mut rng)));

    let mut best: Option<GammaSolution> = None;
    for start in starts {
        let run = rgd_maximize(&objective, start, cfg)?;
        if best.as_ref().is_none_or(|b| run.value > b.gamma) {
            best = Some(GammaSolution {
                c: run.point,
                gamma: run.value,
                trace: run.trace,
                iterations: run.iterations,
                grad_norm: run.grad_norm,
                converged: run.converged,
            });
        }
    }
    let solution = best.expect("identity start always runs");
    let bounds = bounds_from_spectral(&s1, &s2);
    let raw_sq = constant_part(&s1, &s2) - 2.0 * solution.gamma;
    let slack = 1e-9 * bounds.xi.abs().max(1.0);
    debug_assert!(
        raw_sq >= bounds.lower_sq - slack && raw_sq <= bounds.upper_sq + slack,
        "estimate {raw_sq} outside [{}, {}]",
        bounds.lower_sq,
        bounds.upper_sq
    );
    let distance_sq = raw_sq.clamp(bounds.lower_sq, bounds.upper_sq).max(0.0);
    Ok(IgwEstimate { distance: distance_sq.sqrt(), solution, bounds, swapped })
}

/// Squared IGW distance implied by an arbitrary frame `c` (an upper bound on
/// the true value).
pub fn igw_sq_at_frame(g1: &Gaussian, g2: &Gaussian, c: &StiefelPoint) -> Result<f64> {
    let s1 = spectral_form(g1)?;
    let s2 = spectral_form(g2)?;
    Ok(constant_part(&s1, &s2) - 2.0 * gamma_objective(&s1, &s2, c)?)
}

/// Coupling induced by a frame `c ∈ St(d1, d2)`, `d1 = dim g1 ≥ d2 = dim g2`:
/// cross-covariance `K = Q1 Λ1^{1/2} C Λ2^{1/2} Q2ᵀ` and map
/// `T(x) = m2 + Q2 Λ2^{1/2} Cᵀ (Λ1^{1/2})⁺ Q1ᵀ (x − m1)`.
pub fn igw_coupling(g1: &Gaussian, g2: &Gaussian, c: &StiefelPoint) -> Result<GaussianCoupling> {
    let (d1, d2) = (g1.dim(), g2.dim());
    if d1 < d2 {
        return Err(Error::Dimension(format!("first Gaussian must have the larger dimension ({d1} < {d2})")));
    }
    if c.shape() != (d1, d2) {
        return Err(Error::Dimension(format!("frame has shape {:?}, expected {:?}", c.shape(), (d1, d2))));
    }
    let s1 = spectral_form(g1)?;
    let s2 = spectral_form(g2)?;
    let root1 = DMatrix::from_diagonal(&s1.sqrt_lambdas());
    let root2 = DMatrix::from_diagonal(&s2.sqrt_lambdas());
    let cut = SUPPORT_TOL * s1.lambdas.max().max(0.0);
    let root1_pinv = DMatrix::from_diagonal(&s1.lambdas.map(|l| if l > cut { 1.0 / l.sqrt() } else { 0.0 }));

    let cross = &s1.q * &root1 * c.matrix() * &root2 * s2.q.transpose();
    let matrix = &s2.q * &root2 * c.matrix().transpose() * root1_pinv * s1.q.transpose();

    let n = d1 + d2;
    let mut cov = DMatrix::zeros(n, n);
    cov.view_mut((0, 0), (d1, d1)).copy_from(g1.cov());
    cov.view_mut((d1, d1), (d2, d2)).copy_from(g2.cov());
    cov.view_mut((0, d1), (d1, d2)).copy_from(&cross);
    cov.view_mut((d1, 0), (d2, d1)).copy_from(&cross.transpose());
    let cov = symmetrize(&cov);
    if !spectra::is_psd(&cov, crate::gaussian::PSD_TOL) {
        return Err(Error::Constraint("coupling covariance is not PSD".into()));
    }
    let mut mean = DVector::zeros(n);
    mean.rows_mut(0, d1).copy_from(g1.mean());
    mean.rows_mut(d1, d2).copy_from(g2.mean());
    Ok(GaussianCoupling {
        mean,
        cov,
        cross,
        map: AffineMap { matrix, pivot: g1.mean().clone(), offset: g2.mean().clone() },
    })
}

/// `λ̄_k = Σ_i w_i λ_k(Σ_i) 1{k ≤ d_i}` for `k ≤ d_target`.
pub fn barycenter_spectrum(spectra: &[DVector<f64>], weights: &[f64], d_target: usize) -> DVector<f64> {
    let mut out = DVector::zeros(d_target);
    for (s, &w) in spectra.iter().zip(weights) {
        for k in 0..d_target.min(s.len()) {
            out[k] += w * s[k];
        }
    }
    out
}

/// Weighted IGW barycenter of centered Gaussians, restricted to `ℝ^{d_target}`:
/// `𝒩(0, diag(λ̄))` with the weighted average of the sorted spectra.
pub fn igw_barycenter(col: &WeightedCollection, d_target: usize) -> Result<Gaussian> {
    if d_target == 0 {
        return Err(Error::InvalidInput("target dimension must be positive".into()));
    }
    if let Some(i) = col.gaussians().iter().position(|g| !g.is_centered(CENTER_TOL)) {
        return Err(Error::Unsupported(format!(
            "IGW barycenter needs centered Gaussians; input {i} has a non-zero mean"
        )));
    }
    let spectra = col.gaussians().iter().map(|g| sorted_spectrum(g.cov())).collect::<Result<Vec<_>>>()?;
    let lambdas = barycenter_spectrum(&spectra, col.weights(), d_target);
    Gaussian::centered(DMatrix::from_diagonal(&lambdas))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(v))
    }

    #[test]
    fn gamma_examples() {
        let s1 = spectral_form(&Gaussian::centered(diag(&[4.0, 1.0])).unwrap()).unwrap();
        let s2 = spectral_form(&Gaussian::centered(diag(&[2.0, 3.0])).unwrap()).unwrap();
        let v = gamma_objective(&s1, &s2, &StiefelPoint::identity(2, 2)).unwrap();
        assert_eq!(v, 4.0 * 3.0 + 1.0 * 2.0);

        let u = spectral_form(&Gaussian::univariate(1.0, 1.0).unwrap()).unwrap();
        let plus = StiefelPoint::identity(1, 1);
        let minus = StiefelPoint::new(DMatrix::from_element(1, 1, -1.0)).unwrap();
        assert_eq!(gamma_objective(&u, &u, &plus).unwrap(), 3.0);
        assert_eq!(gamma_objective(&u, &u, &minus).unwrap(), -1.0);

        assert!(gamma_objective(&s1, &u, &StiefelPoint::identity(2, 2)).is_err());
    }

    #[test]
    fn gamma_swaps_when_first_is_smaller() {
        let small = spectral_form(&Gaussian::from_diagonal(&[1.0], &[2.0]).unwrap()).unwrap();
        let big = spectral_form(&Gaussian::from_diagonal(&[0.0, 1.0], &[3.0, 1.0]).unwrap()).unwrap();
        let c = StiefelPoint::identity(2, 1);
        assert_eq!(gamma_objective(&small, &big, &c).unwrap(), gamma_objective(&big, &small, &c).unwrap());
    }

    #[test]
    fn bounds_examples() {
        let b = igw_bounds(
            &Gaussian::centered(diag(&[4.0, 1.0])).unwrap(),
            &Gaussian::centered(diag(&[1.0, 1.0])).unwrap(),
        )
        .unwrap();
        assert_eq!(b.lower, 3.0);
        assert_eq!(b.upper, 3.0);

        let b = igw_bounds(&Gaussian::univariate(1.0, 1.0).unwrap(), &Gaussian::univariate(2.0, 1.0).unwrap()).unwrap();
        assert!((b.xi - 19.0).abs() < 1e-12);
        assert!((b.lower_sq - 11.0).abs() < 1e-12);
        assert!((b.upper_sq - 11.0).abs() < 1e-12);

        // co-centered: η2 = 2 η1
        let g1 = Gaussian::from_diagonal(&[1.0, 0.5], &[4.0, 1.0]).unwrap();
        let g2 = Gaussian::from_diagonal(&[1.0, 0.5], &[16.0, 4.0]).unwrap();
        let b = igw_bounds(&g1, &g2).unwrap();
        assert!((b.lower - b.upper).abs() < 1e-9);
    }

    #[test]
    fn closed_form_examples() {
        let v = igw_closed_form(
            &Gaussian::centered(diag(&[4.0, 1.0])).unwrap(),
            &Gaussian::centered(diag(&[1.0, 1.0])).unwrap(),
        )
        .unwrap();
        assert_eq!(v, Some(3.0));
        let v = igw_closed_form(&Gaussian::univariate(1.0, 1.0).unwrap(), &Gaussian::univariate(-1.0, 1.0).unwrap())
            .unwrap();
        assert_eq!(v, Some(0.0));
        let v = igw_closed_form(&Gaussian::univariate(0.0, 1.0).unwrap(), &Gaussian::univariate(1.0, 1.0).unwrap())
            .unwrap()
            .unwrap();
        assert!((v - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn closed_form_declines_misaligned_means() {
        let g1 = Gaussian::from_diagonal(&[1.0, 0.0], &[4.0, 1.0]).unwrap();
        let g2 = Gaussian::from_diagonal(&[1.0, 1.0], &[4.0, 1.0]).unwrap();
        assert_eq!(igw_closed_form_with_case(&g1, &g2).unwrap(), None);
        let g3 = Gaussian::from_diagonal(&[-3.0, 0.0], &[4.0, 1.0]).unwrap();
        let (case, _) = igw_closed_form_with_case(&g1, &g3).unwrap().unwrap();
        assert_eq!(case, ClosedFormCase::CoCentered);
    }

    #[test]
    fn rgd_examples() {
        let g = Gaussian::centered(diag(&[3.0, 2.0, 0.5])).unwrap();
        let e = igw_distance_rgd(&g, &g, &SolverConfig::rgd()).unwrap();
        assert!(e.distance < 1e-7);

        let g1 = Gaussian::centered(diag(&[5.0, 1.0, 0.2])).unwrap();
        let g2 = Gaussian::centered(diag(&[0.3, 2.0, 4.0])).unwrap();
        let e = igw_distance_rgd(&g1, &g2, &SolverConfig::rgd()).unwrap();
        let cf = igw_closed_form(&g1, &g2).unwrap().unwrap();
        assert!((e.distance - cf).abs() < 1e-6);

        let a = Gaussian::univariate(0.7, 2.0).unwrap();
        let b = Gaussian::univariate(-1.3, 0.5).unwrap();
        let e = igw_distance_rgd(&a, &b, &SolverConfig::rgd()).unwrap();
        let cf = igw_closed_form(&a, &b).unwrap().unwrap();
        assert!((e.distance - cf).abs() < 1e-6);
    }

    #[test]
    fn rgd_handles_unequal_dimensions() {
        let g1 = Gaussian::from_diagonal(&[0.5], &[2.0]).unwrap();
        let g2 = Gaussian::from_diagonal(&[0.1, 0.4, -0.2], &[3.0, 1.0, 0.5]).unwrap();
        let e = igw_distance_rgd(&g1, &g2, &SolverConfig::rgd()).unwrap();
        assert!(e.swapped);
        assert_eq!(e.solution.c.shape(), (3, 1));
        let back = igw_distance_rgd(&g2, &g1, &SolverConfig::rgd()).unwrap();
        assert!((e.distance - back.distance).abs() < 1e-12);
        assert!(e.bounds.lower <= e.distance && e.distance <= e.bounds.upper);
    }

    #[test]
    fn coupling_examples() {
        let g1 = Gaussian::centered(diag(&[4.0, 1.0])).unwrap();
        let g2 = Gaussian::centered(diag(&[1.0, 1.0])).unwrap();
        let cpl = igw_coupling(&g1, &g2, &StiefelPoint::identity(2, 2)).unwrap();
        assert!((&cpl.cross - diag(&[2.0, 1.0])).norm() < 1e-14);

        let a = Gaussian::univariate(0.0, 4.0).unwrap();
        let b = Gaussian::univariate(0.0, 1.0).unwrap();
        let cpl = igw_coupling(&a, &b, &StiefelPoint::identity(1, 1)).unwrap();
        assert!((cpl.map.matrix[(0, 0)] - 0.5).abs() < 1e-15);

        // map pushes the first marginal onto the second
        let g1 = Gaussian::new(
            DVector::from_vec(vec![1.0, -1.0, 0.5]),
            DMatrix::from_row_slice(3, 3, &[3.0, 0.4, 0.1, 0.4, 2.0, 0.3, 0.1, 0.3, 1.0]),
        )
        .unwrap();
        let g2 = Gaussian::new(DVector::from_vec(vec![2.0, 0.0]), DMatrix::from_row_slice(2, 2, &[1.5, 0.2, 0.2, 0.7]))
            .unwrap();
        let c = StiefelPoint::random(3, 2, &mut sampling::seeded(3));
        let cpl = igw_coupling(&g1, &g2, &c).unwrap();
        let pushed = cpl.map.push_forward(&g1).unwrap();
        assert!((pushed.cov() - g2.cov()).norm() < 1e-12);
        assert!((pushed.mean() - g2.mean()).norm() < 1e-12);
        // cross block is the covariance between X and T(X)
        assert!((g1.cov() * cpl.map.matrix.transpose() - &cpl.cross).norm() < 1e-12);
        assert!(igw_coupling(&g2, &g1, &StiefelPoint::identity(2, 2)).is_err());
    }

    #[test]
    fn barycenter_examples() {
        let g = Gaussian::centered(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        let col = WeightedCollection::uniform(vec![g]).unwrap();
        let b = igw_barycenter(&col, 2).unwrap();
        assert!((b.cov() - diag(&[3.0, 1.0])).norm() < 1e-14);

        let col = WeightedCollection::uniform(vec![
            Gaussian::centered(diag(&[4.0, 2.0])).unwrap(),
            Gaussian::centered(diag(&[2.0, 0.0])).unwrap(),
        ])
        .unwrap();
        assert_eq!(*igw_barycenter(&col, 2).unwrap().cov(), diag(&[3.0, 1.0]));

        let col = WeightedCollection::new(
            vec![Gaussian::centered(diag(&[1.0, 5.0])).unwrap(), Gaussian::centered(diag(&[9.0, 9.0])).unwrap()],
            vec![1.0, 0.0],
        )
        .unwrap();
        assert_eq!(*igw_barycenter(&col, 2).unwrap().cov(), diag(&[5.0, 1.0]));

        // mixed dimensions: the 1-d member contributes only to the first slot
        let col = WeightedCollection::uniform(vec![
            Gaussian::centered(diag(&[2.0])).unwrap(),
            Gaussian::centered(diag(&[4.0, 2.0])).unwrap(),
        ])
        .unwrap();
        assert_eq!(*igw_barycenter(&col, 3).unwrap().cov(), diag(&[3.0, 1.0, 0.0]));

        let col = WeightedCollection::uniform(vec![Gaussian::univariate(1.0, 1.0).unwrap()]).unwrap();
        assert!(matches!(igw_barycenter(&col, 1), Err(Error::Unsupported(_))));
    }
}
