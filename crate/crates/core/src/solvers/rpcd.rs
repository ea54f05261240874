use rand::seq::SliceRandom;

use super::rcsd::descent_tolerance;
use super::{prox_increment, Counters, OuterRecord, PermutationMode, Recorder, SolverConfig, SolverOutput};
use crate::error::{Error, Result};
use crate::problem::CompositeProblem;
use crate::rng;

/// Randomized permuted coordinate descent.
///
/// Each outer loop fixes `v^k` in `dh(x^k)`, then sweeps every block once in
/// a permuted order with fresh block gradients and steps
/// `gamma_i = gamma_scale L_i`. After each loop it checks
/// `(1/2) ||x^{k+1} - x^k||^2_[1] <= F(x^k) - F(x^{k+1})`.
pub fn rpcd(problem: &CompositeProblem, x0: &[f64], config: &SolverConfig) -> Result<SolverOutput> {
    config.validate()?;
    let part = problem.partition();
    let oracle = &problem.oracle;
    let l = part.lipschitz();
    let m = part.num_blocks();
    let mut rng = rng::stream(config.seed, rng::STREAM_PERMUTATION);
    let track_residual = problem.phi.is_zero();

    let mut p = oracle.point(x0.to_vec())?;
    let mut f = problem.objective_at(&p)?;
    let mut rec = Recorder::new(problem, config, false);
    rec.stats.initial_objective = f;
    let f0 = f;
    let mut counters = Counters::default();
    rec.record(0, &p, f, 0.0, &counters)?;

    let mut order: Vec<usize> = (0..m).collect();
    let (mut grad, mut delta) = (Vec::new(), Vec::new());
    let mut k = 0;
    let mut stopped = false;
    while !rec.out_of_budget(&counters, k) {
        let v = problem.h.subgrad(p.x())?;
        if track_residual {
            let g = oracle.full_gradient_at(&p)?;
            rec.stats.grad_residual_sum += g.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
        if config.permutation == PermutationMode::RandomShuffle {
            order.shuffle(&mut rng);
        }
        let x_prev = p.x().to_vec();
        for &i in &order {
            let r = part.range(i);
            grad.resize(r.len(), 0.0);
            delta.resize(r.len(), 0.0);
            oracle.gradient_into(&p, r.clone(), &mut grad)?;
            for (g, vi) in grad.iter_mut().zip(&v[r.clone()]) {
                *g -= vi;
            }
            counters.block_evals += 1;
            counters.passes += problem.block_pass(i);
            prox_increment(&problem.phi, &p.x()[r.clone()], &grad, config.gamma_scale * l[i], &mut delta)?;
            oracle.apply_block_step(&mut p, part, i, &delta)?;
        }
        oracle.refresh(&mut p);
        let f_new = problem.objective_at(&p)?;
        let step_w = part.weighted_dist_sq(p.x(), &x_prev, 1.0)?;
        let step_e: f64 = p.x().iter().zip(&x_prev).map(|(a, b)| (a - b) * (a - b)).sum();
        if 0.5 * step_w > f - f_new + descent_tolerance(f, f0) {
            return Err(Error::LipschitzViolation {
                iteration: k,
                lhs: 0.5 * step_w,
                rhs: f - f_new,
            });
        }
        rec.stats.outer.push(OuterRecord {
            iter: k,
            objective_before: f,
            objective_after: f_new,
            step_sq_weighted: step_w,
            step_sq: step_e,
            model_before: f,
            model_after: f_new,
        });
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
