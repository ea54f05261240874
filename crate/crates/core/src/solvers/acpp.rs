use rand::Rng;

use super::inner::{AcdOption, Apcg, NonuniformAcd, Subproblem};
use super::{inner_iters, theory, Counters, OuterRecord, Recorder, SampledIterate, SolverConfig, SolverOutput};
use crate::error::{Error, Result};
use crate::oracles::CachedPoint;
use crate::problem::CompositeProblem;
use crate::rng;

/// Proximal weight: the configured `mu`, or the weak convexity modulus.
pub(crate) fn proximal_weight(problem: &CompositeProblem, config: &SolverConfig) -> Result<f64> {
    let mu = if config.mu > 0.0 { config.mu } else { problem.weak_convexity_mu };
    if !(mu > 0.0) {
        return Err(Error::InvalidParameter(
            "proximal point methods need mu > 0 or a weakly convex problem".into(),
        ));
    }
    if mu < problem.weak_convexity_mu {
        return Err(Error::InvalidParameter(format!(
            "mu = {mu} is below the weak convexity modulus {}",
            problem.weak_convexity_mu
        )));
    }
    Ok(mu)
}

enum Inner {
    Apcg,
    Acd { s: f64, option: AcdOption },
}

/// Accelerated coordinate proximal point method for weakly convex
/// `f + phi` (`h` must vanish).
///
/// Outer step `k` runs `t` accelerated proximal coordinate steps on
/// `F(x) + mu ||x - x^k||^2` from `x^k`. The returned point is `x^k_hat`
/// for `k_hat` uniform on `{2, ..., K+1}`; `x^{k_hat - 1}` is returned as
/// well so that callers can solve the corresponding subproblem.
pub fn acpp(problem: &CompositeProblem, x0: &[f64], config: &SolverConfig) -> Result<SolverOutput> {
    config.validate()?;
    if !problem.h.is_zero() {
        return Err(Error::InvalidParameter("acpp needs h = 0".into()));
    }
    let mu = proximal_weight(problem, config)?;
    let part = problem.partition();
    let t = inner_iters(problem, config, || {
        theory::acpp_t0(mu, problem.global_lipschitz(), part.l_max(), part.num_blocks())
    });
    proximal_point(problem, x0, config, mu, t, Inner::Apcg)
}

/// Proximal point method for smooth weakly convex `f` whose subproblems are
/// solved by non-uniform accelerated coordinate descent with
/// `p_i ~ (L_i + 2 mu)^((1-s)/2)`.
pub fn acpp_smooth(problem: &CompositeProblem, x0: &[f64], config: &SolverConfig) -> Result<SolverOutput> {
    config.validate()?;
    if !problem.h.is_zero() || !problem.phi.is_zero() {
        return Err(Error::InvalidParameter("acpp_smooth needs phi = 0 and h = 0".into()));
    }
    let mu = proximal_weight(problem, config)?;
    let t = inner_iters(problem, config, || {
        theory::acpp_smooth_t0(mu, problem.global_lipschitz(), problem.partition().lipschitz(), config.s)
    });
    proximal_point(
        problem,
        x0,
        config,
        mu,
        t,
        Inner::Acd {
            s: config.s,
            option: config.acd_option,
        },
    )
}

fn proximal_point(
    problem: &CompositeProblem,
    x0: &[f64],
    config: &SolverConfig,
    mu: f64,
    t: usize,
    inner: Inner,
) -> Result<SolverOutput> {
    let mut rng = rng::stream(config.seed, rng::STREAM_BLOCKS);
    let mut pick = rng::stream(config.seed, rng::STREAM_OUTPUT);
    let big_k = config.max_iters;

    let mut p = problem.oracle.point(x0.to_vec())?;
    let mut f = problem.objective_at(&p)?;
    let mut rec = Recorder::new(problem, config, false);
    rec.stats.initial_objective = f;
    let mut counters = Counters::default();
    rec.record(0, &p, f, 0.0, &counters)?;

    let mut sampled: Option<(usize, CachedPoint, CachedPoint, f64)> = None;
    let mut k = 0;
    let mut stopped = false;
    while k <= big_k && !matches!(config.max_passes, Some(b) if counters.passes >= b) {
        let sub = Subproblem::proximal_point(problem, p.x().to_vec(), mu)?;
        let next = match inner {
            Inner::Apcg => {
                let mut run = Apcg::new(&sub, p.clone())?;
                for _ in 0..t {
                    run.step(&mut rng, &mut counters)?;
                }
                run.into_x()
            }
            Inner::Acd { s, option } => {
                let mut run = NonuniformAcd::new(&sub, p.clone(), s, option)?;
                for _ in 0..t {
                    run.step(&mut rng, &mut counters)?;
                }
                run.into_x()
            }
        };
        let f_new = problem.objective_at(&next)?;
        let step_w = problem.partition().weighted_dist_sq(next.x(), p.x(), 1.0)?;
        let step_e: f64 = next.x().iter().zip(p.x()).map(|(a, b)| (a - b) * (a - b)).sum();
        rec.stats.outer.push(OuterRecord {
            iter: k,
            objective_before: f,
            objective_after: f_new,
            step_sq_weighted: step_w,
            step_sq: step_e,
            model_before: f,
            model_after: f_new + mu * step_e,
        });
        // reservoir draw keeps the index uniform over {2, ..., k+1}
        let idx = k + 1;
        if idx >= 2 && pick.random_range(0..idx - 1) == 0 {
            sampled = Some((idx, p.clone(), next.clone(), f_new));
        }
        p = next;
        f = f_new;
        k += 1;
        if rec.due(&counters) && rec.record(k, &p, f, step_w, &counters)? {
            stopped = true;
            break;
        }
    }
    if !stopped && rec.trace.records.last().map(|r| r.outer_iter) != Some(k) {
        let step = rec.stats.outer.last().map_or(0.0, |o| o.step_sq_weighted);
        rec.record(k, &p, f, step, &counters)?;
    }
    let (x_out, f_out, sample) = match sampled {
        Some((k_hat, prev, x_hat, f_hat)) => (
            x_hat.into_x(),
            f_hat,
            Some(SampledIterate {
                k_hat,
                x_prev: prev.into_x(),
            }),
        ),
        // stopped before a second iterate existed
        None => (p.into_x(), f, None),
    };
    Ok(rec.finish(x_out, counters, k, f_out, sample))
}
