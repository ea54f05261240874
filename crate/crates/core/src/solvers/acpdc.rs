use super::inner::{Apcg, Subproblem};
use super::{inner_iters, theory, Counters, OuterRecord, Recorder, SolverConfig, SolverOutput};
use crate::error::Result;
use crate::problem::CompositeProblem;
use crate::rng;

/// Accelerated coordinate proximal DC method.
///
/// Each outer step linearizes `h` at `x^k`, adds `(mu/2) ||x - x^k||^2_[1]`
/// and runs `t` accelerated proximal coordinate steps on the resulting
/// strongly convex model, warm-started at `x^k`.
pub fn acpdc(problem: &CompositeProblem, x0: &[f64], config: &SolverConfig) -> Result<SolverOutput> {
    config.validate()?;
    let mu = config.mu;
    let t = inner_iters(problem, config, || theory::acpdc_t0(mu, problem.num_blocks()));
    let mut rng = rng::stream(config.seed, rng::STREAM_BLOCKS);

    let mut p = problem.oracle.point(x0.to_vec())?;
    let mut f = problem.objective_at(&p)?;
    let mut rec = Recorder::new(problem, config, false);
    rec.stats.initial_objective = f;
    let mut counters = Counters::default();
    rec.record(0, &p, f, 0.0, &counters)?;
    let mut k = 0;
    let mut stopped = false;
    while !rec.out_of_budget(&counters, k) {
        let v = problem.h.subgrad(p.x())?;
        let sub = Subproblem::linearized(problem, v, p.x().to_vec(), mu)?;
        let model_start = sub.value_at(&p)?;
        let mut run = Apcg::new(&sub, p.clone())?;
        for _ in 0..t {
            run.step(&mut rng, &mut counters)?;
        }
        let next = run.into_x();
        let model_end = sub.value_at(&next)?;
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
            model_after: f + (model_end - model_start),
        });
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
    Ok(rec.finish(p.into_x(), counters, k, f, None))
}
