use super::{prox_increment, Counters, Recorder, SolverConfig, SolverOutput};
use crate::error::{Error, Result};
use crate::problem::CompositeProblem;
use crate::regularizers::HKind;
use crate::rng::{self, BlockSampler};

/// Relative slack of the per-iteration descent check.
pub(crate) const DESCENT_RTOL: f64 = 1e-9;

pub(crate) fn descent_tolerance(f_prev: f64, f0: f64) -> f64 {
    DESCENT_RTOL * f_prev.abs() + 1e-15 * (1.0 + f0.abs())
}

/// Randomized coordinate subgradient descent.
///
/// Each iteration samples block `i` with probability proportional to
/// `L_i^(1-s)`, takes a composite proximal step on `grad_i f - v_i` with
/// `gamma_i = gamma_scale L_i`, and checks
/// `F(x+) + (gamma_i - L_i/2) ||x+ - x||^2 <= F(x)`.
pub fn rcsd(problem: &CompositeProblem, x0: &[f64], config: &SolverConfig) -> Result<SolverOutput> {
    config.validate()?;
    let part = problem.partition();
    let oracle = &problem.oracle;
    let l = part.lipschitz();
    let weights: Vec<f64> = l.iter().map(|&li| li.powf(1.0 - config.s)).collect();
    let sampler = BlockSampler::weighted(&weights)?;
    let mut rng = rng::stream(config.seed, rng::STREAM_BLOCKS);

    let mut p = oracle.point(x0.to_vec())?;
    let mut hs = problem.h.state(p.x())?;
    let separable_h = !matches!(problem.h.kind, HKind::LargestK { .. });
    let mut f = problem.objective_tracked(&p, &hs)?;
    let f0 = f;
    let mut h_val = hs.value(p.x())?;

    let mut rec = Recorder::new(problem, config, true);
    rec.stats.initial_objective = f0;
    let mut counters = Counters::default();
    rec.record(0, &p, f, 0.0, &counters)?;

    let (mut grad, mut v, mut delta, mut scratch) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut k = 0;
    let mut last_step = 0.0;
    let mut stopped = false;
    while !rec.out_of_budget(&counters, k) {
        let i = sampler.sample(&mut rng);
        let r = part.range(i);
        let gamma = config.gamma_scale * l[i];
        grad.resize(r.len(), 0.0);
        v.resize(r.len(), 0.0);
        delta.resize(r.len(), 0.0);
        oracle.gradient_into(&p, r.clone(), &mut grad)?;
        hs.block_subgrad_into(p.x(), r.clone(), &mut v);
        for (g, vi) in grad.iter_mut().zip(&v) {
            *g -= vi;
        }
        counters.block_evals += 1;
        counters.passes += problem.block_pass(i);
        prox_increment(&problem.phi, &p.x()[r.clone()], &grad, gamma, &mut delta)?;

        let sep_before = if separable_h {
            problem.separable_block_value(p.x(), r.clone())?
        } else {
            problem.phi.value(&p.x()[r.clone()])
        };
        let df = oracle.apply_step_with_delta(&mut p, r.clone(), &delta, problem.block_rows(i), &mut scratch)?;
        hs.sync(p.x(), r.clone());
        let sep_after = if separable_h {
            problem.separable_block_value(p.x(), r.clone())?
        } else {
            problem.phi.value(&p.x()[r.clone()])
        };
        let mut df_total = df + sep_after - sep_before;
        if !separable_h {
            let h_new = hs.value(p.x())?;
            df_total -= h_new - h_val;
            h_val = h_new;
        }
        let step_sq: f64 = delta.iter().map(|d| d * d).sum();
        let f_new = f + df_total;
        let lhs = f_new + (gamma - 0.5 * l[i]) * step_sq;
        if !f_new.is_finite() {
            return Err(Error::NumericOverflow("objective"));
        }
        if lhs > f + descent_tolerance(f, f0) {
            return Err(Error::LipschitzViolation { iteration: k, lhs, rhs: f });
        }
        rec.stats.descent_sum += (gamma - 0.5 * l[i]) * step_sq;
        rec.stats.decrease_sum += f - f_new;
        f = f_new;
        last_step = l[i] * step_sq;
        k += 1;

        if rec.due(&counters) {
            oracle.refresh(&mut p);
            let exact = problem.objective_tracked(&p, &hs)?;
            if rec.record(k, &p, exact, last_step, &counters)? {
                stopped = true;
                break;
            }
        }
    }
    oracle.refresh(&mut p);
    let f_final = problem.objective_tracked(&p, &hs)?;
    if !stopped && rec.trace.records.last().map(|r| r.outer_iter) != Some(k) {
        rec.record(k, &p, f_final, last_step, &counters)?;
    }
    Ok(rec.finish(p.into_x(), counters, k, f_final, None))
}
