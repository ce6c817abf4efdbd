//! Gradient ascent on the Stiefel manifold `St(n, p) = {C ∈ ℝ^{n×p} : CᵀC = I}`.
//!
//! With the embedded metric the Riemannian gradient is the tangent projection
//! of the Euclidean one,
//!
//! ```text
//! grad f(C) = ∇f(C) − C sym(Cᵀ ∇f(C)),   sym(A) = (A + Aᵀ)/2,
//! ```
//!
//! and points are retracted with `qf(C + ξ)`, the thin QR factor whose `R`
//! has a positive diagonal.

use nalgebra::DMatrix;

use super::SolverConfig;
use crate::error::{Error, Result};
use crate::sampling::{self, SeededRng};

/// Largest tolerated `‖CᵀC − I‖_F`.
pub const FEASIBILITY_TOL: f64 = 1e-10;

const MAX_HALVINGS: usize = 60;
const ARMIJO: f64 = 1e-4;

/// A matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct StiefelPoint(DMatrix<f64>);

impl StiefelPoint {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let err = feasibility_error(&matrix);
        if matrix.nrows() < matrix.ncols() || !(err <= FEASIBILITY_TOL) {
            return Err(Error::Constraint(format!(
                "{}x{} matrix is not on the Stiefel manifold (‖CᵀC − I‖ = {err:e})",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self(matrix))
    }

    /// The rectangular identity `[I; 0]`.
    pub fn identity(n: usize, p: usize) -> Self {
        assert!(n >= p, "Stiefel point needs n >= p");
        Self(DMatrix::identity(n, p))
    }

    /// Q factor of a seeded Gaussian matrix.
    pub fn random(n: usize, p: usize, rng: &mut SeededRng) -> Self {
        Self(sampling::haar_orthonormal(rng, n, p))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn feasibility_error(&self) -> f64 {
        feasibility_error(&self.0)
    }

    /// Tangent projection of an ambient direction.
    pub fn project(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        let c = &self.0;
        let ctz = c.transpose() * z;
        let sym = (&ctz + ctz.transpose()) * 0.5;
        z - c * sym
    }

    /// `qf(C + ξ)`.
    pub fn retract(&self, xi: &DMatrix<f64>) -> Self {
        Self(sampling::qf(&self.0 + xi))
    }
}

fn feasibility_error(c: &DMatrix<f64>) -> f64 {
    let p = c.ncols();
    (c.transpose() * c - DMatrix::identity(p, p)).norm()
}

/// A smooth function on `St(n, p)` given through its Euclidean gradient.
pub trait StiefelObjective {
    fn value(&self, c: &DMatrix<f64>) -> f64;
    fn euclidean_gradient(&self, c: &DMatrix<f64>) -> DMatrix<f64>;

    fn riemannian_gradient(&self, c: &StiefelPoint) -> DMatrix<f64> {
        c.project(&self.euclidean_gradient(c.matrix()))
    }
}

#[derive(Debug, Clone)]
pub struct RgdResult {
    pub point: StiefelPoint,
    pub value: f64,
    /// Objective after every accepted iterate, starting with the initial value.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
}

/// Maximises `objective` from `init`.
///
/// Each iteration backtracks from the current trial step, halving until the
/// retracted point satisfies a sufficient-increase test; the trial step is
/// doubled after two consecutive full-step acceptances. Stops when the
/// Riemannian gradient norm drops below `cfg.grad_tol` or after
/// `cfg.max_iters` iterations.
pub fn rgd_maximize<O: StiefelObjective + ?Sized>(
    objective: &O,
    init: StiefelPoint,
    cfg: &SolverConfig,
) -> Result<RgdResult> {
    cfg.validate()?;
    if init.feasibility_error() > FEASIBILITY_TOL {
        return Err(Error::Constraint("initial point is not on the Stiefel manifold".into()));
    }
    let mut point = init;
    let mut value = objective.value(point.matrix());
    let mut trace = vec![value];
    let mut step = cfg.step_init;
    let mut full_steps = 0;
    let mut grad_norm = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        let grad = objective.riemannian_gradient(&point);
        grad_norm = grad.norm();
        if grad_norm < cfg.grad_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut t = step;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let candidate = point.retract(&(&grad * t));
            let v = objective.value(candidate.matrix());
            if v >= value + ARMIJO * t * grad_norm * grad_norm {
                accepted = Some((candidate, v));
                break;
            }
            t *= 0.5;
        }
        let Some((candidate, v)) = accepted else {
            break;
        };
        debug_assert!(candidate.feasibility_error() <= FEASIBILITY_TOL);
        point = candidate;
        value = v;
        trace.push(value);
        if t == step {
            full_steps += 1;
            if full_steps >= 2 {
                step *= 2.0;
                full_steps = 0;
            }
        } else {
            step = t;
            full_steps = 0;
        }
    }
    if !converged {
        grad_norm = objective.riemannian_gradient(&point).norm();
        converged = grad_norm < cfg.grad_tol;
    }
    Ok(RgdResult { point, value, trace, iterations, grad_norm, converged })
}
