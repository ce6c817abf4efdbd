//! Riemannian optimisation engines.
//!
//! - [`stiefel`]: gradient ascent on `St(n, p) = {C : CᵀC = I}` with a QR
//!   retraction and backtracking, used for the IGW `γ` problem.
//! - [`block_gram`]: the manifold `{U = (U_1; …; U_p) : U_i U_iᵀ = Σ_i}` of
//!   low-rank factors with prescribed diagonal blocks.
//! - [`rtr`]: trust-region minimisation on the block-Gram manifold with a
//!   truncated-CG inner solver, plus second-order stationarity checks.

pub mod block_gram;
pub mod rtr;
pub mod stiefel;

use serde::{Deserialize, Serialize};

pub use block_gram::{BlockFactor, BlockGram, BlockObjective, PairwiseTraceObjective};
pub use rtr::{check_sosp, rtr_minimize, RtrResult};
pub use stiefel::{rgd_maximize, RgdResult, StiefelObjective, StiefelPoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub seed: u64,
    pub step_init: f64,
    pub restarts: usize,
}

impl SolverConfig {
    /// Settings for the IGW gradient ascent: 50 iterations, gradient
    /// tolerance 1e-2, identity start plus 4 random restarts.
    pub const fn rgd() -> Self {
        Self { max_iters: 50, grad_tol: 1e-2, seed: 0, step_init: 1.0, restarts: 4 }
    }

    /// Settings for the trust-region solver. `step_init` is the initial
    /// trust radius.
    pub const fn rtr() -> Self {
        Self { max_iters: 500, grad_tol: 1e-6, seed: 0, step_init: 1.0, restarts: 3 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.max_iters == 0 {
            return Err(crate::Error::InvalidInput("max_iters must be positive".into()));
        }
        if !(self.grad_tol > 0.0) || !(self.step_init > 0.0) {
            return Err(crate::Error::InvalidInput("grad_tol and step_init must be positive".into()));
        }
        Ok(())
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::rgd()
    }
}

/// Second-order stationarity summary for a block factor.
///
/// `certified_global` holds exactly when the Riemannian gradient is small,
/// the Hessian has no eigenvalue below `−tol` and the stacked factor is rank
/// deficient; such a point is a global optimum of the lifted semidefinite
/// program.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SospReport {
    pub grad_norm: f64,
    pub hess_min_eig_estimate: f64,
    pub factor_rank: usize,
    pub rank_k: usize,
    pub tol: f64,
    pub certified_global: bool,
}
