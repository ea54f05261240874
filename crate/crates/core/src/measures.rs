//! Optimality measures: the composite subgradient `g` and the prox-mapping
//! `p`, plus the proximal-point surrogate used for weakly convex problems.
//!
//! The subgradient `v` of `h` is always the deterministic selection made by
//! [`ConcaveH::subgrad`](crate::regularizers::ConcaveH::subgrad), so a
//! reported gap is exact for that `v` and an upper bound over `dh(x)`.

use crate::blockspace::BlockPartition;
use crate::error::{check_len, Error, Result};
use crate::oracles::CachedPoint;
use crate::problem::CompositeProblem;
use crate::regularizers::{HKind, SeparablePhi};
use crate::rng;
use crate::solvers::inner::{apcg_certified, certified_budget, Subproblem};
use crate::solvers::{theory, Counters};

/// Default certified tolerance of inner solves.
pub const DEFAULT_INNER_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct OptimalityReport {
    /// Composite subgradient with `gamma_i = L_i` (or as requested).
    pub g: Vec<f64>,
    pub g_norm_dual_s: f64,
    /// Prox-mapping `mu sum_i L_i U_i (x_i - xbar_i)`, when computed.
    pub p: Option<Vec<f64>>,
    pub p_norm_dual_1: f64,
    pub v_used: Vec<f64>,
    /// Certified suboptimality of `x_bar` in its subproblem.
    pub inner_gap: f64,
    pub x_bar: Option<Vec<f64>>,
}

/// `g_i = gamma_i (x_i - P_i(x_i, grad_i f - v_i, gamma_i))`.
pub fn composite_subgradient(
    part: &BlockPartition,
    phi: &SeparablePhi,
    x: &[f64],
    grad_f: &[f64],
    v: &[f64],
    gammas: &[f64],
) -> Result<Vec<f64>> {
    let d = part.dim();
    check_len(d, x.len())?;
    check_len(d, grad_f.len())?;
    check_len(d, v.len())?;
    check_len(part.num_blocks(), gammas.len())?;
    let y: Vec<f64> = grad_f.iter().zip(v).map(|(g, v)| g - v).collect();
    let mut g = vec![0.0; d];
    for (i, &gamma) in gammas.iter().enumerate() {
        let r = part.range(i);
        phi.prox_into(&x[r.clone()], &y[r.clone()], gamma, &mut g[r.clone()])?;
        for (gj, &xj) in g[r.clone()].iter_mut().zip(&x[r]) {
            *gj = gamma * (xj - *gj);
        }
    }
    Ok(g)
}

/// `||g(x, grad f(x) - v, gamma)||_[s],*` with `gamma_i = gamma_scale L_i`.
pub fn criticality_gap(problem: &CompositeProblem, p: &CachedPoint, gamma_scale: f64, s: f64) -> Result<f64> {
    let grad = problem.oracle.full_gradient_at(p)?;
    let v = problem.h.subgrad(p.x())?;
    let part = problem.partition();
    let gammas: Vec<f64> = part.lipschitz().iter().map(|l| gamma_scale * l).collect();
    let g = composite_subgradient(part, &problem.phi, p.x(), &grad, &v, &gammas)?;
    part.dual_weighted_norm(&g, s)
}

/// [`criticality_gap`] at a plain vector.
pub fn criticality_gap_at(problem: &CompositeProblem, x: &[f64], gamma_scale: f64, s: f64) -> Result<f64> {
    let p = problem.oracle.point(x.to_vec())?;
    criticality_gap(problem, &p, gamma_scale, s)
}

/// `||grad f(x) - v||^2` for the smooth setting.
pub fn gradient_norm_sq(problem: &CompositeProblem, p: &CachedPoint) -> Result<f64> {
    let g = problem.oracle.full_gradient_at(p)?;
    let v = problem.h.subgrad(p.x())?;
    Ok(g.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// Solves `min_y f + phi - <v, y> + (mu/2) ||y - x||_[1]^2` to `inner_tol`
/// and reports the prox-mapping together with `g` at `gamma_i = L_i`.
pub fn prox_point_measure(
    problem: &CompositeProblem,
    x: &[f64],
    v: Vec<f64>,
    mu: f64,
    inner_tol: f64,
) -> Result<OptimalityReport> {
    let p = problem.oracle.point(x.to_vec())?;
    prox_point_measure_at(problem, &p, v, mu, inner_tol, None, 0)
}

pub fn prox_point_measure_at(
    problem: &CompositeProblem,
    p: &CachedPoint,
    v: Vec<f64>,
    mu: f64,
    inner_tol: f64,
    budget: Option<usize>,
    seed: u64,
) -> Result<OptimalityReport> {
    check_len(problem.dim(), v.len())?;
    if !(inner_tol > 0.0) {
        return Err(Error::InvalidParameter(format!("inner tolerance must be positive, got {inner_tol}")));
    }
    let part = problem.partition();
    let x = p.x();
    let sub = Subproblem::linearized(problem, v.clone(), x.to_vec(), mu)?;
    let budget = budget.unwrap_or_else(|| certified_budget(part.num_blocks(), sub.mu_tilde()));
    // its own stream: measuring never perturbs the solver's draws
    let mut rng = rng::stream(seed, rng::STREAM_MEASURE);
    let mut counters = Counters::default();
    let (bar, gap) = apcg_certified(&sub, p.clone(), inner_tol, budget, &mut rng, &mut counters)?;
    let x_bar = bar.into_x();

    let l = part.lipschitz();
    let mut pm = vec![0.0; x.len()];
    for i in 0..part.num_blocks() {
        for j in part.range(i) {
            pm[j] = mu * l[i] * (x[j] - x_bar[j]);
        }
    }
    let grad = problem.oracle.full_gradient_at(p)?;
    let g = composite_subgradient(part, &problem.phi, x, &grad, &v, l)?;
    Ok(OptimalityReport {
        g_norm_dual_s: part.dual_weighted_norm(&g, 1.0)?,
        g,
        p_norm_dual_1: part.dual_weighted_norm(&pm, 1.0)?,
        p: Some(pm),
        v_used: v,
        inner_gap: gap.max(0.0),
        x_bar: Some(x_bar),
    })
}

/// Constants of the two-sided bound between `||g(x, grad f - v, gamma)||_[1],*`
/// (with `gamma_i = gamma L_i`) and `||p(x, v, mu)||_[1],*`:
/// `lower * ||p|| <= ||g|| <= upper * ||p||`. Requires `mu <= gamma < 3 mu`.
pub fn equivalence_constants(l: f64, l_min: f64, mu: f64, gamma: f64) -> Result<(f64, f64)> {
    if !(mu > 0.0 && gamma >= mu && gamma < 3.0 * mu) {
        return Err(Error::InvalidParameter(format!("need mu <= gamma < 3 mu, got mu = {mu}, gamma = {gamma}")));
    }
    Ok((theory::measure_lower(l, l_min, mu, gamma), theory::measure_upper(l, l_min, mu)))
}

/// Computable stationarity surrogate for a sampled proximal point iterate.
#[derive(Clone, Debug)]
pub struct ProximalReport {
    /// Certified minimizer of `F + mu ||. - x_prev||^2`.
    pub x_star: Vec<f64>,
    /// `||x_hat - x_star||`.
    pub distance: f64,
    /// `2 mu ||x_star - x_prev||`, which bounds `dist(0, dF(x_star))`.
    pub stationarity: f64,
    pub inner_gap: f64,
}

pub fn proximal_report(
    problem: &CompositeProblem,
    x_hat: &[f64],
    x_prev: &[f64],
    mu: f64,
    inner_tol: f64,
    seed: u64,
) -> Result<ProximalReport> {
    check_len(problem.dim(), x_hat.len())?;
    let sub = Subproblem::proximal_point(problem, x_prev.to_vec(), mu)?;
    let start = problem.oracle.point(x_hat.to_vec())?;
    let budget = certified_budget(problem.num_blocks(), sub.mu_tilde());
    let mut rng = rng::stream(seed, rng::STREAM_MEASURE);
    let mut counters = Counters::default();
    let (star, gap) = apcg_certified(&sub, start, inner_tol, budget, &mut rng, &mut counters)?;
    let x_star = star.into_x();
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, w)| (u - w) * (u - w)).sum::<f64>().sqrt();
    Ok(ProximalReport {
        distance: dist(x_hat, &x_star),
        stationarity: 2.0 * mu * dist(&x_star, x_prev),
        x_star,
        inner_gap: gap.max(0.0),
    })
}

/// Bound `M` on `||v||` over all `v` in `dh(x)`, for the nonsmooth `h`
/// families (`None` otherwise).
pub fn h_subgradient_bound(kind: &HKind, scale: f64, d: usize) -> Option<f64> {
    match *kind {
        HKind::LargestK { lambda, k } => Some(scale * lambda * (k as f64).sqrt()),
        HKind::Scad { lambda, .. } => Some(scale * lambda * (d as f64).sqrt()),
        HKind::Zero => Some(0.0),
        HKind::QuadraticShift { .. } => None,
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::oracles::{DataMatrix, LossKind, SmoothOracle};
    use crate::regularizers::ConcaveH;

    fn quad_problem(phi: SeparablePhi, h: ConcaveH) -> CompositeProblem {
        // f(x) = 1/(2n) ||A x - b||^2, A = diag-ish 3x3 with off-diagonal coupling
        let rows = vec![vec![2.0, 0.5, 0.0], vec![0.0, 1.0, 0.3], vec![0.4, 0.0, 1.5]];
        let a = DataMatrix::from_dense_rows(&rows).unwrap();
        let oracle = SmoothOracle::new(LossKind::LeastSquares, Arc::new(a), vec![1.0, -2.0, 0.5]).unwrap();
        CompositeProblem::new(oracle, phi, h, 3).unwrap()
    }

    #[test]
    fn smooth_subgradient_is_gradient() {
        let prob = quad_problem(SeparablePhi::zero(), ConcaveH::zero());
        let x = [0.3, -0.7, 1.1];
        let grad = prob.oracle.full_gradient(&x).unwrap();
        let g = composite_subgradient(prob.partition(), &prob.phi, &x, &grad, &[0.0; 3], &[0.7, 3.0, 11.0]).unwrap();
        for (a, b) in g.iter().zip(&grad) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn l1_dead_zone_gives_zero() {
        let part = BlockPartition::uniform(4, 2).unwrap();
        let phi = SeparablePhi::l1(1.0).unwrap();
        let g = composite_subgradient(&part, &phi, &[0.0; 4], &[0.5, -0.9, 1.0, 0.0], &[0.0; 4], &[2.0, 5.0]).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn p_norm_identity_and_fixed_point() {
        let prob = quad_problem(SeparablePhi::l1(0.05).unwrap(), ConcaveH::scad(0.1, 3.0).unwrap());
        let x = vec![0.4, -1.2, 0.9];
        let v = prob.h.subgrad(&x).unwrap();
        let rep = prox_point_measure(&prob, &x, v.clone(), 0.5, 1e-12).unwrap();
        let bar = rep.x_bar.clone().unwrap();
        let lhs = rep.p_norm_dual_1;
        let rhs = 0.5 * prob.partition().weighted_dist_sq(&x, &bar, 1.0).unwrap().sqrt();
        assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
        // iterating x <- x_bar with v fixed converges to a point with p = 0
        let mut y = bar;
        let mut last = lhs;
        for _ in 0..200 {
            let rep = prox_point_measure(&prob, &y, v.clone(), 0.5, 1e-14).unwrap();
            assert!(rep.p_norm_dual_1 <= last + 1e-9);
            last = rep.p_norm_dual_1;
            y = rep.x_bar.unwrap();
        }
        assert!(last < 1e-6, "{last}");
    }

    #[test]
    fn equivalence_constants_order() {
        let (lo, hi) = equivalence_constants(4.0, 1.0, 0.5, 0.5).unwrap();
        assert!(lo > 0.0 && lo < 1.0 && hi > 1.0);
        assert!(equivalence_constants(4.0, 1.0, 0.5, 1.5).is_err());
    }
}
