//! Multimarginal couplings of Gaussians.
//!
//! * Multimarginal IGW between centered Gaussians has the closed-form
//!   solution `C_ij = Q_i Λ_i^{1/2} Λ_j^{1/2} Q_jᵀ`, which attains every
//!   pairwise optimum at once.
//! * Multimarginal OT with pairwise quadratic costs reduces to maximising
//!   `Σ_{i<j} tr C_ij` over PSD block matrices with diagonal blocks `Σ_i`.
//!   It is solved through the factorisation `C_ij = U_i U_jᵀ`, `U_i ∈ ℝ^{d×k}`,
//!   with `k = d + 1`; a rank-deficient second-order stationary factor is a
//!   global optimum.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{common_dim, pad_to_dim, spectral_form, Gaussian, PSD_TOL};
use crate::igw::CENTER_TOL;
use crate::manifold::{rtr_minimize, BlockFactor, BlockGram, PairwiseTraceObjective, SolverConfig, SospReport};
use crate::sampling;
use crate::spectra::{self, symmetrize};
use crate::transport::bw_map;

/// How a coupling was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingStatus {
    /// Exact construction from a closed form.
    ClosedForm,
    /// Factor passed the second-order and rank test.
    Certified,
    /// Best feasible factor found; optimality not certified.
    Uncertified,
    /// Feasible coupling built from pairwise maps, not optimised.
    Glued,
}

#[derive(Debug, Clone)]
pub struct MultiCoupling {
    pub means: Vec<DVector<f64>>,
    /// `blocks[i][j] = C_ij`, with `C_ii = Σ_i` and `C_ji = C_ijᵀ`.
    pub blocks: Vec<Vec<DMatrix<f64>>>,
    pub cost: f64,
    pub factor: Option<BlockFactor>,
    pub certificate: Option<SospReport>,
    pub status: CouplingStatus,
}

impl MultiCoupling {
    pub fn num_marginals(&self) -> usize {
        self.blocks.len()
    }

    pub fn dim(&self) -> usize {
        self.blocks.first().map(|r| r[0].nrows()).unwrap_or(0)
    }

    /// The `dp × dp` joint covariance.
    pub fn stacked_covariance(&self) -> DMatrix<f64> {
        let p = self.num_marginals();
        let d = self.dim();
        let mut out = DMatrix::zeros(d * p, d * p);
        for (i, row) in self.blocks.iter().enumerate() {
            for (j, b) in row.iter().enumerate() {
                out.view_mut((i * d, j * d), (d, d)).copy_from(b);
            }
        }
        out
    }

    /// `Σ_{i<j} tr C_ij`, the quantity the OT solver maximises.
    pub fn cross_trace(&self) -> f64 {
        let p = self.num_marginals();
        let mut total = 0.0;
        for i in 0..p {
            for j in (i + 1)..p {
                total += self.blocks[i][j].trace();
            }
        }
        total
    }

    pub fn is_certified(&self) -> bool {
        matches!(self.status, CouplingStatus::ClosedForm | CouplingStatus::Certified)
    }

    /// Largest `‖C_ii − Σ_i‖_F` against the given marginals.
    pub fn marginal_error(&self, gaussians: &[Gaussian]) -> f64 {
        self.blocks
            .iter()
            .zip(gaussians)
            .enumerate()
            .map(|(i, (row, g))| (&row[i] - g.cov()).norm())
            .fold(0.0, f64::max)
    }
}

fn blocks_from_factors(factors: &[DMatrix<f64>]) -> Vec<Vec<DMatrix<f64>>> {
    let p = factors.len();
    let mut blocks: Vec<Vec<DMatrix<f64>>> = vec![Vec::with_capacity(p); p];
    for i in 0..p {
        for j in 0..p {
            let b = if j < i {
                blocks[j][i].transpose()
            } else if i == j {
                symmetrize(&(&factors[i] * factors[i].transpose()))
            } else {
                &factors[i] * factors[j].transpose()
            };
            blocks[i].push(b);
        }
    }
    blocks
}

fn require_nonempty(gaussians: &[Gaussian]) -> Result<()> {
    if gaussians.is_empty() {
        return Err(Error::EmptyInput("no marginals".into()));
    }
    Ok(())
}

/// Closed-form multimarginal IGW coupling of centered Gaussians, after
/// zero-padding all inputs to the largest dimension.
pub fn mm_igw_closed_form(gaussians: &[Gaussian]) -> Result<MultiCoupling> {
    require_nonempty(gaussians)?;
    if let Some(i) = gaussians.iter().position(|g| !g.is_centered(CENTER_TOL)) {
        return Err(Error::Unsupported(format!(
            "multimarginal IGW needs centered Gaussians; input {i} has a non-zero mean"
        )));
    }
    let d = gaussians.iter().map(Gaussian::dim).max().unwrap_or(0);
    let padded = gaussians.iter().map(|g| pad_to_dim(g, d)).collect::<Result<Vec<_>>>()?;
    // factor U_i = Q_i Λ_i^{1/2} gives C_ij = U_i U_jᵀ
    let factors = padded
        .iter()
        .map(|g| {
            let s = spectral_form(g)?;
            Ok(&s.q * DMatrix::from_diagonal(&s.sqrt_lambdas()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut blocks = blocks_from_factors(&factors);
    for (i, g) in padded.iter().enumerate() {
        blocks[i][i] = g.cov().clone();
    }
    let p = padded.len();
    let mut cost = 0.0;
    for i in 0..p {
        for j in (i + 1)..p {
            let cij = &blocks[i][j];
            cost += padded[i].cov().norm_squared() + padded[j].cov().norm_squared() - 2.0 * cij.norm_squared();
        }
    }
    Ok(MultiCoupling {
        means: padded.iter().map(|g| g.mean().clone()).collect(),
        blocks,
        cost: cost.max(0.0),
        factor: None,
        certificate: None,
        status: CouplingStatus::ClosedForm,
    })
}

/// `Σ_{i<j}(‖m_i − m_j‖² + tr Σ_i + tr Σ_j) − 2 cross`.
fn ot_cost(gaussians: &[Gaussian], cross_trace: f64) -> f64 {
    let p = gaussians.len();
    let mut total = 0.0;
    for i in 0..p {
        for j in (i + 1)..p {
            total += (gaussians[i].mean() - gaussians[j].mean()).norm_squared()
                + gaussians[i].cov().trace()
                + gaussians[j].cov().trace();
        }
    }
    (total - 2.0 * cross_trace).max(0.0)
}

/// Multimarginal OT with factor width `d + 1`.
pub fn mm_ot_solve(gaussians: &[Gaussian], cfg: &SolverConfig) -> Result<MultiCoupling> {
    require_nonempty(gaussians)?;
    let d = common_dim(gaussians)?;
    mm_ot_solve_with_rank(gaussians, d + 1, cfg)
}

/// Multimarginal OT with an explicit factor width `k ≥ d`. Returned factors
/// are canonicalised (see [`BlockFactor::canonicalize`]).
pub fn mm_ot_solve_with_rank(gaussians: &[Gaussian], rank_k: usize, cfg: &SolverConfig) -> Result<MultiCoupling> {
    require_nonempty(gaussians)?;
    common_dim(gaussians)?;
    let covs: Vec<_> = gaussians.iter().map(|g| g.cov().clone()).collect();
    let manifold = BlockGram::new(&covs, rank_k)?;
    let init = manifold.random_point(&mut sampling::seeded(cfg.seed));
    let result = rtr_minimize(&manifold, &PairwiseTraceObjective, init, cfg)?;
    let factor = result.factor.canonicalize();
    let mut blocks = blocks_from_factors(&factor.blocks);
    for (i, g) in gaussians.iter().enumerate() {
        blocks[i][i] = g.cov().clone();
    }
    let cross = -result.value;
    let status = if result.report.certified_global { CouplingStatus::Certified } else { CouplingStatus::Uncertified };
    Ok(MultiCoupling {
        means: gaussians.iter().map(|g| g.mean().clone()).collect(),
        blocks,
        cost: ot_cost(gaussians, cross),
        factor: Some(factor),
        certificate: Some(result.report),
        status,
    })
}

/// Feasible OT coupling obtained by pushing the first marginal through the
/// pairwise Bures-Wasserstein maps: `C_ij = A_i Σ_1 A_jᵀ`.
pub fn glued_coupling(gaussians: &[Gaussian]) -> Result<MultiCoupling> {
    require_nonempty(gaussians)?;
    common_dim(gaussians)?;
    let base = &gaussians[0];
    let root = spectra::sqrt_psd(base.cov())?;
    let factors = gaussians
        .iter()
        .enumerate()
        .map(|(i, g)| if i == 0 { Ok(root.clone()) } else { Ok(bw_map(base, g)?.matrix * &root) })
        .collect::<Result<Vec<_>>>()?;
    let mut blocks = blocks_from_factors(&factors);
    for (i, g) in gaussians.iter().enumerate() {
        blocks[i][i] = g.cov().clone();
    }
    let mut out = MultiCoupling {
        means: gaussians.iter().map(|g| g.mean().clone()).collect(),
        blocks,
        cost: 0.0,
        factor: None,
        certificate: None,
        status: CouplingStatus::Glued,
    };
    out.cost = ot_cost(gaussians, out.cross_trace());
    Ok(out)
}

/// Pushes a coupling through `x ↦ Σ_i w_i x_i`.
pub fn barycenter_from_mm(coupling: &MultiCoupling, weights: &[f64]) -> Result<Gaussian> {
    let p = coupling.num_marginals();
    if weights.len() != p {
        return Err(Error::InvalidInput(format!("{} weights for {p} marginals", weights.len())));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::InvalidInput("weights must be non-negative".into()));
    }
    let d = coupling.dim();
    let mut mean = DVector::zeros(d);
    for (m, &w) in coupling.means.iter().zip(weights) {
        mean += m * w;
    }
    let cov = match &coupling.factor {
        Some(f) => {
            let mut avg = DMatrix::zeros(d, f.rank_k);
            for (u, &w) in f.blocks.iter().zip(weights) {
                avg += u * w;
            }
            &avg * avg.transpose()
        }
        None => {
            let mut cov = DMatrix::zeros(d, d);
            for (i, row) in coupling.blocks.iter().enumerate() {
                for (j, b) in row.iter().enumerate() {
                    cov += b * (weights[i] * weights[j]);
                }
            }
            cov
        }
    };
    Gaussian::new(mean, symmetrize(&cov))
}

/// Whether the stacked covariance is PSD at the library tolerance.
pub fn is_valid_coupling(coupling: &MultiCoupling) -> bool {
    spectra::is_psd(&coupling.stacked_covariance(), PSD_TOL)
}

/// Covariances `A Aᵀ + 0.1·I` with seeded standard-normal `A ∈ ℝ^{d×d}`, as
/// centered Gaussians.
pub fn random_marginals(p: usize, d: usize, seed: u64) -> Vec<Gaussian> {
    let mut rng = sampling::seeded(seed);
    (0..p)
        .map(|_| Gaussian::centered(sampling::wishart_like(&mut rng, d, 0.1)).expect("shifted Gram matrix is PD"))
        .collect()
}
