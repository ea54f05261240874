use super::inner::{apcg_certified, certified_budget, Subproblem};
use super::rcsd::descent_tolerance;
use super::{prox_increment, Counters, OuterRecord, Recorder, SolverConfig, SolverOutput};
use crate::error::{Error, Result};
use crate::oracles::CachedPoint;
use crate::problem::CompositeProblem;
use crate::rng;

/// Full proximal gradient step on `f - <v, .>` with step `1/L` from `at`;
/// returns the new point.
fn prox_gradient_step(problem: &CompositeProblem, at: &CachedPoint, v: &[f64], counters: &mut Counters) -> Result<CachedPoint> {
    let oracle = &problem.oracle;
    let d = problem.dim();
    let mut g = vec![0.0; d];
    oracle.gradient_into(at, 0..d, &mut g)?;
    for (gi, vi) in g.iter_mut().zip(v) {
        *gi -= vi;
    }
    counters.block_evals += problem.num_blocks() as u64;
    counters.passes += 1.0;
    let mut delta = vec![0.0; d];
    prox_increment(&problem.phi, at.x(), &g, problem.global_lipschitz(), &mut delta)?;
    let mut next = at.clone();
    let whole = crate::blockspace::BlockPartition::uniform(d, 1)?;
    oracle.apply_block_step(&mut next, &whole, 0, &delta)?;
    Ok(next)
}

fn outer_record(problem: &CompositeProblem, k: usize, prev: &CachedPoint, next: &CachedPoint, f: f64, f_new: f64) -> Result<OuterRecord> {
    let step_w = problem.partition().weighted_dist_sq(next.x(), prev.x(), 1.0)?;
    let step_e: f64 = next.x().iter().zip(prev.x()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(OuterRecord {
        iter: k,
        objective_before: f,
        objective_after: f_new,
        step_sq_weighted: step_w,
        step_sq: step_e,
        model_before: f,
        model_after: f_new,
    })
}

/// Proximal DC algorithm: `x+ = argmin <grad f(x) - v, y> + phi(y) + (L/2) ||y - x||^2`
/// with the global Lipschitz constant `L`.
pub fn pdca(problem: &CompositeProblem, x0: &[f64], config: &SolverConfig) -> Result<SolverOutput> {
    config.validate()?;
    let mut p = problem.oracle.point(x0.to_vec())?;
    let mut f = problem.objective_at(&p)?;
    let f0 = f;
    let mut rec = Recorder::new(problem, config, false);
    rec.stats.initial_objective = f;
    let mut counters = Counters::default();
    rec.record(0, &p, f, 0.0, &counters)?;
    let mut k = 0;
    let mut stopped = false;
    while !rec.out_of_budget(&counters, k) {
        let v = problem.h.subgrad(p.x())?;
        let next = prox_gradient_step(problem, &p, &v, &mut counters)?;
        let f_new = problem.objective_at(&next)?;
        if f_new > f + descent_tolerance(f, f0) {
            return Err(Error::LipschitzViolation { iteration: k, lhs: f_new, rhs: f });
        }
        let o = outer_record(problem, k, &p, &next, f, f_new)?;
        rec.stats.outer.push(o);
        p = next;
        f = f_new;
        k += 1;
        if k % 64 == 0 {
            problem.oracle.refresh(&mut p);
        }
        if rec.due(&counters) && rec.record(k, &p, f, o.step_sq_weighted, &counters)? {
            stopped = true;
            break;
        }
    }
    finish(rec, p, counters, k, f, stopped)
}

/// Proximal DC algorithm with extrapolation: the step is taken from
/// `y = x^k + theta_k (x^k - x^{k-1})` with the accelerated-gradient
/// `theta` schedule, reset every `restart_every` iterations.
pub fn pdca_e(problem: &CompositeProblem, x0: &[f64], config: &SolverConfig) -> Result<SolverOutput> {
    config.validate()?;
    let mut p = problem.oracle.point(x0.to_vec())?;
    let mut prev = p.clone();
    let mut y = p.clone();
    let mut f = problem.objective_at(&p)?;
    let mut rec = Recorder::new(problem, config, false);
    rec.stats.initial_objective = f;
    let mut counters = Counters::default();
    rec.record(0, &p, f, 0.0, &counters)?;
    let (mut t_prev, mut t) = (1.0f64, 1.0f64);
    let mut k = 0;
    let mut stopped = false;
    while !rec.out_of_budget(&counters, k) {
        if k % config.restart_every == 0 {
            t_prev = 1.0;
            t = 1.0;
        }
        let theta = (t_prev - 1.0) / t;
        y.set_lincomb(1.0 + theta, &p, -theta, &prev);
        let v = problem.h.subgrad(p.x())?;
        let next = prox_gradient_step(problem, &y, &v, &mut counters)?;
        let f_new = problem.objective_at(&next)?;
        let o = outer_record(problem, k, &p, &next, f, f_new)?;
        rec.stats.outer.push(o);
        prev = std::mem::replace(&mut p, next);
        f = f_new;
        t_prev = t;
        t = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        k += 1;
        if k % 64 == 0 {
            problem.oracle.refresh(&mut p);
            problem.oracle.refresh(&mut prev);
        }
        if rec.due(&counters) && rec.record(k, &p, f, o.step_sq_weighted, &counters)? {
            stopped = true;
            break;
        }
    }
    finish(rec, p, counters, k, f, stopped)
}

/// DC algorithm: each outer step minimizes the convex model
/// `f + phi - <v^k, .>` (plus a small proximal floor) to a certified gap.
pub fn dca(problem: &CompositeProblem, x0: &[f64], config: &SolverConfig) -> Result<SolverOutput> {
    config.validate()?;
    let mut rng = rng::stream(config.seed, rng::STREAM_BLOCKS);
    let mut p = problem.oracle.point(x0.to_vec())?;
    let mut f = problem.objective_at(&p)?;
    let f0 = f;
    let mut rec = Recorder::new(problem, config, false);
    rec.stats.initial_objective = f;
    let mut counters = Counters::default();
    rec.record(0, &p, f, 0.0, &counters)?;
    let mut k = 0;
    let mut stopped = false;
    while !rec.out_of_budget(&counters, k) {
        let v = problem.h.subgrad(p.x())?;
        let sub = Subproblem::dc_floor(problem, v, p.x().to_vec(), config.dca_floor)?;
        let budget = config
            .inner_budget
            .unwrap_or_else(|| certified_budget(problem.num_blocks(), sub.mu_tilde()));
        let (next, _gap) = apcg_certified(&sub, p.clone(), config.dca_tol, budget, &mut rng, &mut counters)?;
        let f_new = problem.objective_at(&next)?;
        // the model majorizes F, so an accurate solve cannot increase F
        if f_new > f + descent_tolerance(f, f0) + config.dca_tol {
            return Err(Error::LipschitzViolation { iteration: k, lhs: f_new, rhs: f });
        }
        let o = outer_record(problem, k, &p, &next, f, f_new)?;
        rec.stats.outer.push(o);
        p = next;
        f = f_new;
        k += 1;
        if rec.due(&counters) && rec.record(k, &p, f, o.step_sq_weighted, &counters)? {
            stopped = true;
            break;
        }
    }
    finish(rec, p, counters, k, f, stopped)
}

fn finish(
    mut rec: Recorder<'_>,
    p: CachedPoint,
    counters: Counters,
    k: usize,
    f: f64,
    stopped: bool,
) -> Result<SolverOutput> {
    if !stopped && rec.trace.records.last().map(|r| r.outer_iter) != Some(k) {
        let step = rec.stats.outer.last().map_or(0.0, |o| o.step_sq_weighted);
        rec.record(k, &p, f, step, &counters)?;
    }
    Ok(rec.finish(p.into_x(), counters, k, f, None))
}
