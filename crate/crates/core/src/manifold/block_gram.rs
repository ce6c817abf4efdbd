//! The block-Gram manifold
//!
//! ```text
//! M = { U = (U_1; …; U_p) ∈ ℝ^{dp×k} : U_i U_iᵀ = Σ_i for every i }
//! ```
//!
//! with the Euclidean metric. Each block lives on a scaled Stiefel manifold,
//! so all geometry is block-diagonal:
//!
//! - tangent space at `U_i`: `V_i U_iᵀ + U_i V_iᵀ = 0`;
//! - normal space: `S_i U_i` with `S_i` symmetric;
//! - projection: `P(Z)_i = Z_i − S_i U_i` where `S_i Σ_i + Σ_i S_i = Z_i U_iᵀ + U_i Z_iᵀ`
//!   (a Sylvester equation solved in the eigenbasis of `Σ_i`);
//! - retraction: `U_i + V_i ↦ Σ_i^{1/2} polar(Σ_i^{-1/2}(U_i + V_i))`, where
//!   `polar(W) = (W Wᵀ)^{-1/2} W` is the nearest matrix with orthonormal rows;
//! - Hessian: `Hess f(U)[V] = P(∇²f(U)[V] − S V)`, with `S_i` the normal
//!   coefficients of the Euclidean gradient.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::sampling::{self, SeededRng};
use crate::spectra::{self, symmetrize};

/// Largest tolerated `‖U_i U_iᵀ − Σ_i‖_F / ‖Σ_i‖_F`.
pub const FEASIBILITY_TOL: f64 = 1e-8;

/// Tangent (or ambient) vectors: one `d × k` matrix per block.
pub type Blocks = Vec<DMatrix<f64>>;

/// A point `U = (U_1; …; U_p)` of `p` blocks of shape `d × k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockFactor {
    pub blocks: Blocks,
    pub rank_k: usize,
}

impl BlockFactor {
    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// The `dp × k` matrix with the blocks stacked vertically.
    pub fn stacked(&self) -> DMatrix<f64> {
        let d = self.blocks.first().map(|b| b.nrows()).unwrap_or(0);
        let p = self.blocks.len();
        let mut out = DMatrix::zeros(d * p, self.rank_k);
        for (i, b) in self.blocks.iter().enumerate() {
            out.view_mut((i * d, 0), (d, self.rank_k)).copy_from(b);
        }
        out
    }

    /// Numerical rank of the stacked factor: singular values above
    /// `rel_tol · σ_max`.
    pub fn numerical_rank(&self, rel_tol: f64) -> usize {
        let sv = self.stacked().singular_values();
        let max = sv.max();
        if max <= 0.0 {
            return 0;
        }
        sv.iter().filter(|&&s| s > rel_tol * max).count()
    }

    /// Right-multiplies by the orthogonal `Q` with `Uᵀ = Q R`, `R_ii ≥ 0`, so
    /// the stacked factor becomes `Rᵀ` (lower trapezoidal). Factors that differ
    /// only by a right rotation map to the same canonical factor.
    pub fn canonicalize(&self) -> BlockFactor {
        let stacked = self.stacked();
        if stacked.nrows() < self.rank_k {
            return self.clone();
        }
        let q = sampling::qf(stacked.transpose());
        let d = self.blocks.first().map(|b| b.nrows()).unwrap_or(0);
        let rotated = stacked * q;
        let blocks = (0..self.blocks.len()).map(|i| rotated.rows(i * d, d).into_owned()).collect();
        BlockFactor { blocks, rank_k: self.rank_k }
    }
}

/// Objective on block factors given through Euclidean derivatives.
pub trait BlockObjective {
    fn value(&self, u: &[DMatrix<f64>]) -> f64;
    fn euclidean_gradient(&self, u: &[DMatrix<f64>]) -> Blocks;
    fn euclidean_hessian(&self, u: &[DMatrix<f64>], v: &[DMatrix<f64>]) -> Blocks;
}

/// `f(U) = −Σ_{i<j} tr(U_i U_jᵀ)`.
///
/// With `T = Σ_j U_j`: `f = −(‖T‖² − Σ_i ‖U_i‖²)/2`, `∇_i f = −(T − U_i)` and
/// the Hessian is the constant map `V ↦ −(Σ_j V_j − V_i)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct PairwiseTraceObjective;

fn block_sum(u: &[DMatrix<f64>]) -> DMatrix<f64> {
    let mut total = u[0].clone();
    for b in &u[1..] {
        total += b;
    }
    total
}

impl BlockObjective for PairwiseTraceObjective {
    fn value(&self, u: &[DMatrix<f64>]) -> f64 {
        let mut total = 0.0;
        for i in 0..u.len() {
            for j in (i + 1)..u.len() {
                total += u[i].dot(&u[j]);
            }
        }
        -total
    }

    fn euclidean_gradient(&self, u: &[DMatrix<f64>]) -> Blocks {
        let total = block_sum(u);
        u.iter().map(|b| b - &total).collect()
    }

    fn euclidean_hessian(&self, _u: &[DMatrix<f64>], v: &[DMatrix<f64>]) -> Blocks {
        let total = block_sum(v);
        v.iter().map(|b| b - &total).collect()
    }
}

#[derive(Debug, Clone)]
struct BlockGeometry {
    cov: DMatrix<f64>,
    eigvecs: DMatrix<f64>,
    eigvals: DVector<f64>,
    sqrt: DMatrix<f64>,
    inv_sqrt: DMatrix<f64>,
}

/// The manifold itself: the prescribed blocks `Σ_i` and the factor width `k`.
#[derive(Debug, Clone)]
pub struct BlockGram {
    blocks: Vec<BlockGeometry>,
    dim: usize,
    rank_k: usize,
}

impl BlockGram {
    /// Requires at least one block, a common dimension `d`, positive definite
    /// `Σ_i` and `k ≥ d`.
    pub fn new(covs: &[DMatrix<f64>], rank_k: usize) -> Result<Self> {
        let Some(first) = covs.first() else {
            return Err(Error::EmptyInput("no covariance blocks".into()));
        };
        let d = first.nrows();
        if rank_k < d {
            return Err(Error::InvalidInput(format!("factor width {rank_k} is below dimension {d}")));
        }
        let mut blocks = Vec::with_capacity(covs.len());
        for (i, cov) in covs.iter().enumerate() {
            if cov.shape() != (d, d) {
                return Err(Error::Dimension(format!(
                    "block {i} is {}x{}, expected {d}x{d}",
                    cov.nrows(),
                    cov.ncols()
                )));
            }
            let decomp = spectra::sym_eig(cov)?;
            spectra::require_pd(&decomp)
                .map_err(|e| Error::InvalidInput(format!("covariance {i} is not positive definite: {e}")))?;
            blocks.push(BlockGeometry {
                cov: symmetrize(cov),
                sqrt: decomp.map_eigenvalues(f64::sqrt),
                inv_sqrt: decomp.map_eigenvalues(|l| 1.0 / l.sqrt()),
                eigvecs: decomp.eigenvectors,
                eigvals: decomp.eigenvalues,
            });
        }
        Ok(Self { blocks, dim: d, rank_k })
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank_k(&self) -> usize {
        self.rank_k
    }

    pub fn cov(&self, i: usize) -> &DMatrix<f64> {
        &self.blocks[i].cov
    }

    /// `p (d k − d(d+1)/2)`.
    pub fn tangent_dim(&self) -> usize {
        let d = self.dim;
        self.blocks.len() * (d * self.rank_k - d * (d + 1) / 2)
    }

    /// Worst relative block residual `‖U_i U_iᵀ − Σ_i‖_F / ‖Σ_i‖_F`.
    pub fn feasibility_error(&self, u: &BlockFactor) -> f64 {
        self.blocks
            .iter()
            .zip(&u.blocks)
            .map(|(g, b)| spectra::rel_frobenius(&(b * b.transpose()), &g.cov))
            .fold(0.0, f64::max)
    }

    pub fn check_point(&self, u: &BlockFactor) -> Result<()> {
        if u.blocks.len() != self.blocks.len() || u.rank_k != self.rank_k {
            return Err(Error::Constraint(format!(
                "factor has {} blocks of width {}, expected {} of width {}",
                u.blocks.len(),
                u.rank_k,
                self.blocks.len(),
                self.rank_k
            )));
        }
        if let Some(b) = u.blocks.iter().find(|b| b.shape() != (self.dim, self.rank_k)) {
            return Err(Error::Constraint(format!(
                "block of shape {:?}, expected {:?}",
                b.shape(),
                (self.dim, self.rank_k)
            )));
        }
        let err = self.feasibility_error(u);
        if !(err <= FEASIBILITY_TOL) {
            return Err(Error::Constraint(format!("factor violates U_i U_iᵀ = Σ_i (relative error {err:e})")));
        }
        Ok(())
    }

    /// `U_i = Σ_i^{1/2} O_i` with `O_i` a Haar-random `d × k` matrix with
    /// orthonormal rows.
    pub fn random_point(&self, rng: &mut SeededRng) -> BlockFactor {
        let blocks = self
            .blocks
            .iter()
            .map(|g| {
                let o = sampling::haar_orthonormal(rng, self.rank_k, self.dim).transpose();
                &g.sqrt * o
            })
            .collect();
        BlockFactor { blocks, rank_k: self.rank_k }
    }

    /// Solves `S Σ_i + Σ_i S = rhs` for symmetric `rhs`.
    fn sylvester(&self, i: usize, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        let g = &self.blocks[i];
        let mut inner = g.eigvecs.transpose() * rhs * &g.eigvecs;
        for a in 0..self.dim {
            for b in 0..self.dim {
                inner[(a, b)] /= g.eigvals[a] + g.eigvals[b];
            }
        }
        symmetrize(&(&g.eigvecs * inner * g.eigvecs.transpose()))
    }

    /// Symmetric `S_i` such that `Z_i − S_i U_i` is tangent.
    pub fn normal_coefficients(&self, u: &BlockFactor, z: &[DMatrix<f64>]) -> Blocks {
        (0..self.blocks.len())
            .map(|i| {
                let m = &z[i] * u.blocks[i].transpose();
                self.sylvester(i, &(&m + m.transpose()))
            })
            .collect()
    }

    pub fn project(&self, u: &BlockFactor, z: &[DMatrix<f64>]) -> Blocks {
        self.normal_coefficients(u, z).iter().enumerate().map(|(i, s)| &z[i] - s * &u.blocks[i]).collect()
    }

    pub fn retract(&self, u: &BlockFactor, v: &[DMatrix<f64>]) -> BlockFactor {
        let blocks = self
            .blocks
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let w = &g.inv_sqrt * (&u.blocks[i] + &v[i]);
                let gram = symmetrize(&(&w * w.transpose()));
                let polar_scale = match spectra::sym_eig(&gram) {
                    Ok(decomp) => decomp.map_eigenvalues(|l| 1.0 / l.max(f64::MIN_POSITIVE).sqrt()),
                    Err(_) => DMatrix::identity(self.dim, self.dim),
                };
                &g.sqrt * polar_scale * w
            })
            .collect();
        BlockFactor { blocks, rank_k: self.rank_k }
    }

    pub fn riemannian_gradient<O: BlockObjective + ?Sized>(&self, objective: &O, u: &BlockFactor) -> Blocks {
        self.project(u, &objective.euclidean_gradient(&u.blocks))
    }

    /// `Hess f(U)[V]`, given the normal coefficients of the Euclidean gradient.
    pub fn hessian_with<O: BlockObjective + ?Sized>(
        &self,
        objective: &O,
        u: &BlockFactor,
        grad_normal: &[DMatrix<f64>],
        v: &[DMatrix<f64>],
    ) -> Blocks {
        let mut ambient = objective.euclidean_hessian(&u.blocks, v);
        for (i, a) in ambient.iter_mut().enumerate() {
            *a -= &grad_normal[i] * &v[i];
        }
        self.project(u, &ambient)
    }

    pub fn hessian<O: BlockObjective + ?Sized>(&self, objective: &O, u: &BlockFactor, v: &[DMatrix<f64>]) -> Blocks {
        let s = self.normal_coefficients(u, &objective.euclidean_gradient(&u.blocks));
        self.hessian_with(objective, u, &s, v)
    }
}

pub(crate) fn inner(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

pub(crate) fn norm(a: &[DMatrix<f64>]) -> f64 {
    inner(a, a).sqrt()
}

/// `a += alpha · b`
pub(crate) fn axpy(a: &mut [DMatrix<f64>], alpha: f64, b: &[DMatrix<f64>]) {
    for (x, y) in a.iter_mut().zip(b) {
        x.zip_apply(y, |a, b| *a += alpha * b);
    }
}

pub(crate) fn scaled(a: &[DMatrix<f64>], alpha: f64) -> Blocks {
    a.iter().map(|x| x * alpha).collect()
}

pub(crate) fn zeros_like(a: &[DMatrix<f64>]) -> Blocks {
    a.iter().map(|x| DMatrix::zeros(x.nrows(), x.ncols())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(seed: u64, p: usize, d: usize) -> (BlockGram, SeededRng) {
        let mut rng = sampling::seeded(seed);
        let covs: Vec<_> = (0..p).map(|_| sampling::wishart_like(&mut rng, d, 0.1)).collect();
        (BlockGram::new(&covs, d + 1).unwrap(), rng)
    }

    fn random_tangent(m: &BlockGram, u: &BlockFactor, rng: &mut SeededRng) -> Blocks {
        let z: Blocks = (0..m.num_blocks()).map(|_| sampling::standard_normal(rng, m.dim(), m.rank_k())).collect();
        m.project(u, &z)
    }

    #[test]
    fn random_points_are_feasible() {
        let (m, mut rng) = problem(1, 4, 3);
        let u = m.random_point(&mut rng);
        assert!(m.feasibility_error(&u) < 1e-12);
        m.check_point(&u).unwrap();
    }

    #[test]
    fn projection_is_tangent_and_idempotent() {
        let (m, mut rng) = problem(2, 3, 3);
        let u = m.random_point(&mut rng);
        let v = random_tangent(&m, &u, &mut rng);
        for (vi, ui) in v.iter().zip(&u.blocks) {
            let s = vi * ui.transpose();
            assert!((&s + s.transpose()).amax() < 1e-10);
        }
        let again = m.project(&u, &v);
        let diff: Blocks = again.iter().zip(&v).map(|(a, b)| a - b).collect();
        assert!(norm(&diff) < 1e-10 * norm(&v));
    }

    #[test]
    fn retraction_restores_feasibility() {
        let (m, mut rng) = problem(3, 5, 2);
        let u = m.random_point(&mut rng);
        let v = random_tangent(&m, &u, &mut rng);
        let r = m.retract(&u, &scaled(&v, 0.7));
        assert!(m.feasibility_error(&r) < 1e-12);
        // first-order agreement with the straight line
        let t = 1e-4;
        let r = m.retract(&u, &scaled(&v, t));
        let diff: Blocks = (0..m.num_blocks()).map(|i| &r.blocks[i] - &u.blocks[i] - &v[i] * t).collect();
        assert!(norm(&diff) < 10.0 * t * t * norm(&v).powi(2));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (m, mut rng) = problem(4, 4, 3);
        let f = PairwiseTraceObjective;
        let u = m.random_point(&mut rng);
        let g = m.riemannian_gradient(&f, &u);
        for _ in 0..5 {
            let v = random_tangent(&m, &u, &mut rng);
            let h = 1e-5;
            let plus = f.value(&m.retract(&u, &scaled(&v, h)).blocks);
            let minus = f.value(&m.retract(&u, &scaled(&v, -h)).blocks);
            let fd = (plus - minus) / (2.0 * h);
            let exact = inner(&g, &v);
            assert!((fd - exact).abs() <= 1e-5 * exact.abs().max(1.0), "{fd} vs {exact}");
        }
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let (m, mut rng) = problem(5, 3, 2);
        let f = PairwiseTraceObjective;
        let u = m.random_point(&mut rng);
        let v = random_tangent(&m, &u, &mut rng);
        let hv = m.hessian(&f, &u, &v);
        // central difference of the gradient field, transported back by projection
        let h = 1e-5;
        let gp = m.riemannian_gradient(&f, &m.retract(&u, &scaled(&v, h)));
        let gm = m.riemannian_gradient(&f, &m.retract(&u, &scaled(&v, -h)));
        let diff: Blocks = gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let fd = m.project(&u, &diff);
        let err: Blocks = fd.iter().zip(&hv).map(|(a, b)| a - b).collect();
        assert!(norm(&err) <= 1e-5 * norm(&hv).max(1.0), "{} vs {}", norm(&err), norm(&hv));

        // symmetry of the Hessian
        let w = random_tangent(&m, &u, &mut rng);
        let hw = m.hessian(&f, &u, &w);
        assert!((inner(&hv, &w) - inner(&hw, &v)).abs() < 1e-9 * norm(&hv) * norm(&w));
    }

    #[test]
    fn canonical_factor_is_rotation_invariant() {
        let (m, mut rng) = problem(6, 3, 2);
        let u = m.random_point(&mut rng);
        let rot = sampling::haar_orthonormal(&mut rng, 3, 3);
        let rotated = BlockFactor { blocks: u.blocks.iter().map(|b| b * &rot).collect(), rank_k: 3 };
        let a = u.canonicalize().stacked();
        let b = rotated.canonicalize().stacked();
        assert!((a - b).amax() < 1e-10);
    }

    #[test]
    fn rejects_bad_inputs() {
        let singular = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
        assert!(BlockGram::new(&[singular], 3).is_err());
        assert!(BlockGram::new(&[DMatrix::identity(3, 3)], 2).is_err());
        assert!(BlockGram::new(&[DMatrix::identity(2, 2), DMatrix::identity(3, 3)], 4).is_err());
        let m = BlockGram::new(&[DMatrix::identity(2, 2)], 3).unwrap();
        let bad = BlockFactor { blocks: vec![DMatrix::from_element(2, 3, 1.0)], rank_k: 3 };
        assert!(matches!(m.check_point(&bad), Err(Error::Constraint(_))));
    }
}
