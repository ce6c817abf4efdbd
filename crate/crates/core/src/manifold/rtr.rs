//! Riemannian trust-region minimisation on the block-Gram manifold.
//!
//! Outer loop: standard ratio test (`ρ < 0.25` shrinks the radius by 4,
//! `ρ > 0.75` on the boundary doubles it, `ρ > 0.1` accepts). Inner loop:
//! Steihaug-Toint truncated CG on the quadratic model built from
//! Riemannian Hessian-vector products.
//!
//! After convergence the point is checked for second-order stationarity. A
//! negative Hessian eigenvalue triggers a step along the corresponding
//! eigenvector; a full-rank stationary point triggers a fresh random start.
//! Both count against `SolverConfig::restarts`.

use nalgebra::{DMatrix, DVector};

use super::block_gram::{axpy, inner, norm, scaled, zeros_like, BlockFactor, BlockGram, BlockObjective, Blocks};
use super::{SolverConfig, SospReport};
use crate::error::Result;
use crate::sampling::{self, SeededRng};

/// Relative singular-value threshold for the numerical rank of a factor.
pub const RANK_TOL: f64 = 1e-8;

const RHO_ACCEPT: f64 = 0.1;
const RHO_SHRINK: f64 = 0.25;
const RHO_EXPAND: f64 = 0.75;
const TCG_KAPPA: f64 = 0.1;
const TCG_THETA: f64 = 1.0;
const MAX_RADIUS_FACTOR: f64 = 1024.0;
const LANCZOS_MAX_STEPS: usize = 200;
const POLISH_FACTOR: f64 = 1e-4;
const LANCZOS_SEED: u64 = 0x5eed_1a2c;

#[derive(Debug, Clone)]
pub struct RtrResult {
    pub factor: BlockFactor,
    pub value: f64,
    pub report: SospReport,
    /// Outer trust-region iterations summed over all attempts.
    pub iterations: usize,
    pub restarts_used: usize,
}

struct Attempt {
    point: BlockFactor,
    value: f64,
    iterations: usize,
}

/// Minimises `objective` over `manifold` from `init`. `cfg.step_init` is the
/// initial trust radius; `cfg.max_iters` bounds each attempt.
pub fn rtr_minimize<O: BlockObjective + ?Sized>(
    manifold: &BlockGram,
    objective: &O,
    init: BlockFactor,
    cfg: &SolverConfig,
) -> Result<RtrResult> {
    cfg.validate()?;
    manifold.check_point(&init)?;
    let mut rng = sampling::seeded(cfg.seed);
    let mut start = init;
    let mut iterations = 0;
    let mut restarts_used = 0;
    let mut best: Option<(BlockFactor, f64, SospReport)> = None;

    loop {
        let mut attempt = trust_region(manifold, objective, start, cfg);
        iterations += attempt.iterations;
        let (mut report, mut direction) = sosp_with_direction(manifold, objective, &attempt.point, cfg.grad_tol);
        if report.grad_norm <= cfg.grad_tol
            && report.hess_min_eig_estimate >= -cfg.grad_tol
            && report.factor_rank == report.rank_k
        {
            // near a rank-deficient optimum the surplus singular value shrinks
            // only in proportion to the gradient; keep going before giving up
            let polish = SolverConfig { grad_tol: cfg.grad_tol * POLISH_FACTOR, ..*cfg };
            attempt = trust_region(manifold, objective, attempt.point, &polish);
            iterations += attempt.iterations;
            (report, direction) = sosp_with_direction(manifold, objective, &attempt.point, cfg.grad_tol);
        }
        debug_assert!(manifold.feasibility_error(&attempt.point) <= super::block_gram::FEASIBILITY_TOL);

        let better = match &best {
            None => true,
            Some((_, v, r)) => {
                (report.certified_global && !r.certified_global)
                    || (report.certified_global == r.certified_global && attempt.value < *v)
            }
        };
        if better {
            best = Some((attempt.point.clone(), attempt.value, report));
        }
        if report.certified_global || restarts_used >= cfg.restarts {
            break;
        }
        restarts_used += 1;
        start = if report.grad_norm <= cfg.grad_tol && report.hess_min_eig_estimate < -cfg.grad_tol {
            escape_along(manifold, objective, &attempt.point, attempt.value, &direction)
                .unwrap_or_else(|| manifold.random_point(&mut rng))
        } else {
            manifold.random_point(&mut rng)
        };
    }

    let (factor, value, report) = best.expect("at least one attempt runs");
    Ok(RtrResult { factor, value, report, iterations, restarts_used })
}

fn trust_region<O: BlockObjective + ?Sized>(
    manifold: &BlockGram,
    objective: &O,
    start: BlockFactor,
    cfg: &SolverConfig,
) -> Attempt {
    let mut x = start;
    let mut fx = objective.value(&x.blocks);
    let mut radius = cfg.step_init;
    let max_radius = cfg.step_init * MAX_RADIUS_FACTOR;
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        let egrad = objective.euclidean_gradient(&x.blocks);
        let normal = manifold.normal_coefficients(&x, &egrad);
        let grad: Blocks = egrad.iter().zip(&normal).zip(&x.blocks).map(|((g, s), u)| g - s * u).collect();
        let grad_norm = norm(&grad);
        if grad_norm <= cfg.grad_tol {
            break;
        }
        iterations += 1;

        let hess = |v: &[DMatrix<f64>]| manifold.hessian_with(objective, &x, &normal, v);
        let mut step = truncated_cg(&grad, grad_norm, radius, manifold.tangent_dim(), hess);
        let mut model_decrease = -(inner(&grad, &step.eta) + 0.5 * inner(&step.eta, &step.h_eta));
        if !(model_decrease > 0.0) {
            step = cauchy_step(&grad, grad_norm, radius, hess);
            model_decrease = -(inner(&grad, &step.eta) + 0.5 * inner(&step.eta, &step.h_eta));
        }

        let candidate = manifold.retract(&x, &step.eta);
        let f_new = objective.value(&candidate.blocks);
        let reg = 1e3 * f64::EPSILON * fx.abs().max(1.0);
        let rho = (fx - f_new + reg) / (model_decrease + reg);

        if !(rho >= RHO_SHRINK) || !(model_decrease >= 0.0) {
            radius *= 0.25;
        } else if rho > RHO_EXPAND && step.on_boundary {
            radius = (2.0 * radius).min(max_radius);
        }
        if rho > RHO_ACCEPT && model_decrease >= 0.0 {
            x = candidate;
            fx = f_new;
        }
        if radius < 1e-15 * cfg.step_init {
            break;
        }
    }
    Attempt { point: x, value: fx, iterations }
}

/// Minimiser of the model along `−grad` within the trust region.
fn cauchy_step(
    grad: &[DMatrix<f64>],
    grad_norm: f64,
    radius: f64,
    hess: impl Fn(&[DMatrix<f64>]) -> Blocks,
) -> TcgStep {
    let h_grad = hess(grad);
    let curvature = inner(grad, &h_grad);
    let boundary = radius / grad_norm;
    let (tau, on_boundary) = if curvature > 0.0 && grad_norm * grad_norm / curvature < boundary {
        (grad_norm * grad_norm / curvature, false)
    } else {
        (boundary, true)
    };
    TcgStep { eta: scaled(grad, -tau), h_eta: scaled(&h_grad, -tau), on_boundary }
}

struct TcgStep {
    eta: Blocks,
    h_eta: Blocks,
    on_boundary: bool,
}

/// Steihaug-Toint CG for `min ⟨g, η⟩ + ½⟨η, Hη⟩` subject to `‖η‖ ≤ radius`.
fn truncated_cg(
    grad: &[DMatrix<f64>],
    grad_norm: f64,
    radius: f64,
    max_inner: usize,
    hess: impl Fn(&[DMatrix<f64>]) -> Blocks,
) -> TcgStep {
    let mut eta = zeros_like(grad);
    let mut h_eta = zeros_like(grad);
    let mut r = grad.to_vec();
    let mut r_r = grad_norm * grad_norm;
    let mut delta = scaled(&r, -1.0);
    let mut e_pe = 0.0;
    let mut e_pd = 0.0;
    let mut d_pd = r_r;
    let r0 = grad_norm;
    let radius_sq = radius * radius;

    for _ in 0..max_inner.max(1) {
        let h_delta = hess(&delta);
        let d_hd = inner(&delta, &h_delta);
        let alpha = r_r / d_hd;
        let e_pe_new = e_pe + 2.0 * alpha * e_pd + alpha * alpha * d_pd;

        if d_hd <= 0.0 || e_pe_new >= radius_sq {
            let tau = (-e_pd + (e_pd * e_pd + d_pd * (radius_sq - e_pe)).max(0.0).sqrt()) / d_pd;
            axpy(&mut eta, tau, &delta);
            axpy(&mut h_eta, tau, &h_delta);
            return TcgStep { eta, h_eta, on_boundary: true };
        }

        axpy(&mut eta, alpha, &delta);
        axpy(&mut h_eta, alpha, &h_delta);
        e_pe = e_pe_new;
        axpy(&mut r, alpha, &h_delta);
        let r_r_new = inner(&r, &r);
        let r_norm = r_r_new.sqrt();
        if r_norm <= r0 * r0.powf(TCG_THETA).min(TCG_KAPPA) {
            break;
        }
        let beta = r_r_new / r_r;
        r_r = r_r_new;
        for (dl, ri) in delta.iter_mut().zip(&r) {
            *dl *= beta;
            *dl -= ri;
        }
        e_pd = beta * (e_pd + alpha * d_pd);
        d_pd = r_r + beta * beta * d_pd;
    }
    TcgStep { eta, h_eta, on_boundary: false }
}

/// Tries `R(U, ±α v)` for shrinking `α` and returns the first point that
/// lowers the objective.
fn escape_along<O: BlockObjective + ?Sized>(
    manifold: &BlockGram,
    objective: &O,
    point: &BlockFactor,
    value: f64,
    direction: &[DMatrix<f64>],
) -> Option<BlockFactor> {
    let mut alpha = 0.5 * point.stacked().norm();
    for _ in 0..40 {
        for sign in [1.0, -1.0] {
            let candidate = manifold.retract(point, &scaled(direction, sign * alpha));
            if objective.value(&candidate.blocks) < value {
                return Some(candidate);
            }
        }
        alpha *= 0.5;
    }
    None
}

/// Gradient norm, Hessian lower-spectrum estimate and rank test at `point`.
pub fn check_sosp<O: BlockObjective + ?Sized>(
    manifold: &BlockGram,
    objective: &O,
    point: &BlockFactor,
    tol: f64,
) -> SospReport {
    sosp_with_direction(manifold, objective, point, tol).0
}

fn sosp_with_direction<O: BlockObjective + ?Sized>(
    manifold: &BlockGram,
    objective: &O,
    point: &BlockFactor,
    tol: f64,
) -> (SospReport, Blocks) {
    let egrad = objective.euclidean_gradient(&point.blocks);
    let normal = manifold.normal_coefficients(point, &egrad);
    let grad_norm = norm(&manifold.project(point, &egrad));
    let hess = |v: &[DMatrix<f64>]| manifold.hessian_with(objective, point, &normal, v);
    let (hess_min, direction) = lanczos_min_eig(manifold, point, hess);
    let factor_rank = point.numerical_rank(RANK_TOL);
    let rank_k = point.rank_k;
    let certified_global = grad_norm <= tol && hess_min >= -tol && factor_rank < rank_k;
    (SospReport { grad_norm, hess_min_eig_estimate: hess_min, factor_rank, rank_k, tol, certified_global }, direction)
}

/// Smallest Ritz value (and vector) of the Riemannian Hessian from a seeded
/// Lanczos run with full reorthogonalisation. Exact when the tangent space
/// has at most `LANCZOS_MAX_STEPS` dimensions.
fn lanczos_min_eig(
    manifold: &BlockGram,
    point: &BlockFactor,
    hess: impl Fn(&[DMatrix<f64>]) -> Blocks,
) -> (f64, Blocks) {
    let dim = manifold.tangent_dim();
    if dim == 0 {
        return (0.0, zeros_like(&point.blocks));
    }
    let steps = dim.min(LANCZOS_MAX_STEPS);
    let mut rng = sampling::seeded(LANCZOS_SEED);
    let mut basis: Vec<Blocks> = Vec::with_capacity(steps);
    let mut alphas = Vec::with_capacity(steps);
    let mut betas: Vec<f64> = Vec::with_capacity(steps);

    let mut v = fresh_direction(manifold, point, &basis, &mut rng);
    while let Some(current) = v.take() {
        let mut w = hess(&current);
        let a = inner(&w, &current);
        alphas.push(a);
        basis.push(current);
        if basis.len() == steps {
            break;
        }
        for _ in 0..2 {
            for b in &basis {
                let c = inner(&w, b);
                axpy(&mut w, -c, b);
            }
        }
        let w = manifold.project(point, &w);
        let beta = norm(&w);
        let scale = alphas.iter().fold(1.0_f64, |acc, x| acc.max(x.abs()));
        if beta > 1e-10 * scale {
            betas.push(beta);
            v = Some(scaled(&w, 1.0 / beta));
        } else {
            // invariant subspace: continue from a new orthogonal direction
            betas.push(0.0);
            v = fresh_direction(manifold, point, &basis, &mut rng);
            if v.is_none() {
                betas.pop();
            }
        }
    }

    let m = alphas.len();
    let tri = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j {
            betas[i]
        } else if j + 1 == i {
            betas[j]
        } else {
            0.0
        }
    });
    let eig = tri.symmetric_eigen();
    let (idx, &min) = eig.eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty");
    let coeffs: DVector<f64> = eig.eigenvectors.column(idx).into_owned();
    let mut ritz = zeros_like(&point.blocks);
    for (c, b) in coeffs.iter().zip(&basis) {
        axpy(&mut ritz, *c, b);
    }
    let n = norm(&ritz);
    if n > 0.0 {
        ritz = scaled(&ritz, 1.0 / n);
    }
    (min, ritz)
}

fn fresh_direction(manifold: &BlockGram, point: &BlockFactor, basis: &[Blocks], rng: &mut SeededRng) -> Option<Blocks> {
    for _ in 0..5 {
        let z: Blocks = (0..manifold.num_blocks())
            .map(|_| sampling::standard_normal(rng, manifold.dim(), manifold.rank_k()))
            .collect();
        let mut v = manifold.project(point, &z);
        for _ in 0..2 {
            for b in basis {
                let c = inner(&v, b);
                axpy(&mut v, -c, b);
            }
            v = manifold.project(point, &v);
        }
        let n = norm(&v);
        if n > 1e-8 {
            return Some(scaled(&v, 1.0 / n));
        }
    }
    None
}
