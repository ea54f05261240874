//! Accelerated coordinate methods for the strongly convex subproblems built
//! by the outer solvers.
//!
//! A subproblem has the form
//!
//! ```text
//! S(x) = f(x) - <lin, x> + sum_i (w_i / 2) ||x_i - c_i||^2 + phi(x)
//! ```
//!
//! with block constants `lt_i` for its smooth part and strong convexity
//! modulus `mu_tilde` with respect to `||x||^2 = sum_i lt_i ||x_i||^2`.

use rand::Rng;

use super::Counters;
use crate::error::{Error, Result};
use crate::oracles::CachedPoint;
use crate::problem::CompositeProblem;
use crate::regularizers::SeparablePhi;
use crate::rng::BlockSampler;

#[derive(Clone, Debug)]
pub struct Subproblem<'a> {
    pub(crate) problem: &'a CompositeProblem,
    pub(crate) phi: SeparablePhi,
    pub(crate) lin: Option<Vec<f64>>,
    pub(crate) center: Vec<f64>,
    pub(crate) weights: Vec<f64>,
    pub(crate) lt: Vec<f64>,
    pub(crate) mu_tilde: f64,
}

impl<'a> Subproblem<'a> {
    /// `f + phi - <v, x> + (mu/2) ||x - c||_[1]^2`, the linearized model of
    /// `F` around `c` with `v` a subgradient of `h` at `c`.
    pub fn linearized(problem: &'a CompositeProblem, v: Vec<f64>, center: Vec<f64>, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidParameter(format!("proximal weight mu must be positive, got {mu}")));
        }
        if problem.weak_convexity_mu > 0.0 {
            return Err(Error::InvalidParameter(
                "linearized subproblems need convex f; apply the DC shift first".into(),
            ));
        }
        let l = problem.partition().lipschitz();
        Ok(Self {
            problem,
            phi: problem.phi,
            lin: Some(v),
            center,
            weights: l.iter().map(|&li| mu * li).collect(),
            lt: l.iter().map(|&li| (1.0 + mu) * li).collect(),
            mu_tilde: mu / (1.0 + mu),
        })
    }

    /// `f + phi + mu ||x - c||^2` for `f` that is `weak`-weakly convex.
    pub fn proximal_point(problem: &'a CompositeProblem, center: Vec<f64>, mu: f64) -> Result<Self> {
        let weak = problem.weak_convexity_mu;
        if !(mu.is_finite() && 2.0 * mu > weak && mu > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "proximal weight {mu} does not dominate weak convexity {weak}"
            )));
        }
        let l = problem.partition().lipschitz();
        let lt: Vec<f64> = l.iter().map(|&li| li + 2.0 * mu).collect();
        let lt_max = lt.iter().cloned().fold(0.0, f64::max);
        Ok(Self {
            problem,
            phi: problem.phi,
            lin: None,
            center,
            weights: vec![2.0 * mu; l.len()],
            lt,
            mu_tilde: (2.0 * mu - weak) / lt_max,
        })
    }

    /// `f + phi - <v, x> + (eps/2) ||x - c||^2`: the convex DC subproblem
    /// with a small proximal floor that makes it strongly convex.
    pub fn dc_floor(problem: &'a CompositeProblem, v: Vec<f64>, center: Vec<f64>, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("convexity floor must be positive, got {eps}")));
        }
        if problem.weak_convexity_mu > 0.0 {
            return Err(Error::InvalidParameter(
                "the DC subproblem needs convex f; apply the DC shift first".into(),
            ));
        }
        let l = problem.partition().lipschitz();
        let lt: Vec<f64> = l.iter().map(|&li| li + eps).collect();
        let lt_max = lt.iter().cloned().fold(0.0, f64::max);
        let sigma = problem.oracle.ridge().max(0.0) + eps;
        Ok(Self {
            problem,
            phi: problem.phi,
            lin: Some(v),
            center,
            weights: vec![eps; l.len()],
            lt,
            mu_tilde: (sigma / lt_max).min(1.0),
        })
    }

    /// Drops `phi`, keeping only the smooth part.
    pub fn without_phi(mut self) -> Self {
        self.phi = SeparablePhi::zero();
        self
    }

    pub fn mu_tilde(&self) -> f64 {
        self.mu_tilde
    }

    pub fn block_constants(&self) -> &[f64] {
        &self.lt
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// Gradient of the smooth part on block `i`.
    pub(crate) fn block_gradient_into(&self, p: &CachedPoint, i: usize, out: &mut [f64]) -> Result<()> {
        let r = self.problem.partition().range(i);
        self.problem.oracle.gradient_into(p, r.clone(), out)?;
        let w = self.weights[i];
        let x = p.x();
        for (o, j) in out.iter_mut().zip(r) {
            let lin = self.lin.as_ref().map_or(0.0, |v| v[j]);
            *o += w * (x[j] - self.center[j]) - lin;
        }
        Ok(())
    }

    fn full_gradient(&self, p: &CachedPoint) -> Result<Vec<f64>> {
        let part = self.problem.partition();
        let mut g = vec![0.0; part.dim()];
        for i in 0..part.num_blocks() {
            self.block_gradient_into(p, i, &mut g[part.range(i)])?;
        }
        Ok(g)
    }

    /// `S(x)` up to the constant dropped from the linearization.
    pub fn value_at(&self, p: &CachedPoint) -> Result<f64> {
        let part = self.problem.partition();
        let x = p.x();
        let mut v = self.problem.oracle.value_at(p)? + self.phi.value(x);
        if let Some(lin) = &self.lin {
            v -= lin.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
        for i in 0..part.num_blocks() {
            let r = part.range(i);
            let d2: f64 = x[r.clone()].iter().zip(&self.center[r]).map(|(a, c)| (a - c) * (a - c)).sum();
            v += 0.5 * self.weights[i] * d2;
        }
        crate::problem::finite(v, "subproblem value")
    }

    /// One full proximal gradient step with steps `1/lt_i` and the resulting
    /// bound on `S(x+) - min S`.
    pub fn certify(&self, p: &CachedPoint, counters: &mut Counters) -> Result<(CachedPoint, f64)> {
        let part = self.problem.partition();
        let g = self.full_gradient(p)?;
        let x = p.x();
        let mut xp = vec![0.0; x.len()];
        for i in 0..part.num_blocks() {
            let r = part.range(i);
            self.phi.prox_into(&x[r.clone()], &g[r.clone()], self.lt[i], &mut xp[r])?;
        }
        let q = self.problem.oracle.point(xp)?;
        let gq = self.full_gradient(&q)?;
        counters.passes += 2.0;
        let mut dual = 0.0;
        for i in 0..part.num_blocks() {
            let mut s = 0.0;
            for j in part.range(i) {
                let xi = gq[j] - g[j] + self.lt[i] * (x[j] - q.x()[j]);
                s += xi * xi;
            }
            dual += s / self.lt[i];
        }
        Ok((q, dual / (2.0 * self.mu_tilde)))
    }
}

/// One step of the `alpha/beta/gamma` recursion of accelerated proximal
/// coordinate gradient: returns `(alpha, beta, gamma_next)`.
pub fn apcg_coefficients(gamma: f64, mu_tilde: f64, m: usize) -> (f64, f64, f64) {
    let m2 = (m * m) as f64;
    // m^2 a^2 + (gamma - mu) a - gamma = 0, positive root
    let b = gamma - mu_tilde;
    let alpha = (-b + (b * b + 4.0 * m2 * gamma).sqrt()) / (2.0 * m2);
    let gamma_next = (1.0 - alpha) * gamma + alpha * mu_tilde;
    (alpha, alpha * mu_tilde / gamma_next, gamma_next)
}

/// State of an accelerated proximal coordinate gradient run.
pub struct Apcg<'s, 'a> {
    sub: &'s Subproblem<'a>,
    x: CachedPoint,
    z: CachedPoint,
    y: CachedPoint,
    gamma: f64,
    grad: Vec<f64>,
    block: Vec<f64>,
    since_refresh: usize,
}

impl<'s, 'a> Apcg<'s, 'a> {
    /// Starts at `x0` with `gamma_0 = mu_tilde`.
    pub fn new(sub: &'s Subproblem<'a>, x0: CachedPoint) -> Result<Self> {
        Self::with_gamma0(sub, x0, sub.mu_tilde)
    }

    pub fn with_gamma0(sub: &'s Subproblem<'a>, x0: CachedPoint, gamma0: f64) -> Result<Self> {
        let mt = sub.mu_tilde;
        if !(mt > 0.0 && mt <= 1.0) {
            return Err(Error::InvalidParameter(format!("mu_tilde must lie in (0, 1], got {mt}")));
        }
        if !(gamma0 >= mt && gamma0 <= 1.0) {
            return Err(Error::InvalidParameter(format!("gamma_0 must lie in [{mt}, 1], got {gamma0}")));
        }
        Ok(Self {
            sub,
            z: x0.clone(),
            y: x0.clone(),
            x: x0,
            gamma: gamma0,
            grad: Vec::new(),
            block: Vec::new(),
            since_refresh: 0,
        })
    }

    pub fn x(&self) -> &CachedPoint {
        &self.x
    }

    pub fn into_x(mut self) -> CachedPoint {
        self.sub.problem.oracle.refresh(&mut self.x);
        self.x
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R, counters: &mut Counters) -> Result<()> {
        let problem = self.sub.problem;
        let part = problem.partition();
        let m = part.num_blocks();
        let mt = self.sub.mu_tilde;
        let (alpha, beta, gamma_next) = apcg_coefficients(self.gamma, mt, m);

        // y = (a g z + g' x) / (a g + g'): the extrapolated point stays near x
        let denom = alpha * self.gamma + gamma_next;
        self.y.set_lincomb(gamma_next / denom, &self.x, alpha * self.gamma / denom, &self.z);

        let i = rng.random_range(0..m);
        let r = part.range(i);
        self.grad.resize(r.len(), 0.0);
        self.sub.block_gradient_into(&self.y, i, &mut self.grad)?;
        counters.block_evals += 1;
        counters.passes += problem.block_pass(i);

        // x+ = y + m a (z+ - z) + (mt/m)(z - y), where z+ - z = b (y - z) off block i
        let ma = m as f64 * alpha;
        let cy = 1.0 + ma * beta - mt / m as f64;
        let cz = mt / m as f64 - ma * beta;
        self.x.set_lincomb(cy, &self.y, cz, &self.z);
        self.z.lincomb_assign(1.0 - beta, beta, &self.y);

        let zi = &self.z.x()[r.clone()];
        self.block.resize(r.len(), 0.0);
        self.sub.phi.prox_into(zi, &self.grad, ma * self.sub.lt[i], &mut self.block)?;
        for (b, &w) in self.block.iter_mut().zip(zi) {
            *b -= w;
        }
        problem.oracle.apply_block_step(&mut self.z, part, i, &self.block)?;
        for b in self.block.iter_mut() {
            *b *= ma;
        }
        problem.oracle.apply_block_step(&mut self.x, part, i, &self.block)?;

        self.gamma = gamma_next;
        self.since_refresh += 1;
        if self.since_refresh >= 16 * m.max(64) {
            problem.oracle.refresh(&mut self.x);
            problem.oracle.refresh(&mut self.z);
            self.since_refresh = 0;
        }
        Ok(())
    }
}

/// Runs `iters` accelerated steps from `x0`.
pub fn apcg<R: Rng + ?Sized>(
    sub: &Subproblem<'_>,
    x0: CachedPoint,
    iters: usize,
    rng: &mut R,
    counters: &mut Counters,
) -> Result<CachedPoint> {
    let mut run = Apcg::new(sub, x0)?;
    for _ in 0..iters {
        run.step(rng, counters)?;
    }
    Ok(run.into_x())
}

/// Default iteration cap for certified solves: `50 m ceil(1/sqrt(mu_tilde))`.
pub fn certified_budget(m: usize, mu_tilde: f64) -> usize {
    50 * m * (1.0 / mu_tilde.sqrt()).ceil() as usize
}

/// Runs accelerated steps until the certified gap drops to `tol`; returns
/// the certified point and its gap bound.
pub fn apcg_certified<R: Rng + ?Sized>(
    sub: &Subproblem<'_>,
    x0: CachedPoint,
    tol: f64,
    max_iters: usize,
    rng: &mut R,
    counters: &mut Counters,
) -> Result<(CachedPoint, f64)> {
    let m = sub.problem.num_blocks();
    let (mut best, mut best_gap) = sub.certify(&x0, counters)?;
    if best_gap <= tol {
        return Ok((best, best_gap));
    }
    let mut run = Apcg::new(sub, x0)?;
    let check_every = 2 * m;
    let mut done = 0;
    while done < max_iters {
        let chunk = check_every.min(max_iters - done);
        for _ in 0..chunk {
            run.step(rng, counters)?;
        }
        done += chunk;
        let mut probe = run.x().clone();
        sub.problem.oracle.refresh(&mut probe);
        let (q, gap) = sub.certify(&probe, counters)?;
        if gap < best_gap {
            best = q;
            best_gap = gap;
        }
        if best_gap <= tol {
            return Ok((best, best_gap));
        }
    }
    Err(Error::BudgetExceeded {
        iterations: max_iters,
        best_gap,
    })
}

/// Which point accelerated coordinate descent returns each step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum AcdOption {
    /// An extra exact block gradient step at the extrapolated point.
    I,
    /// The extrapolated point itself.
    #[default]
    II,
}

/// Accelerated coordinate descent with blocks drawn `p_i ~ lt_i^((1-s)/2)`
/// for a smooth strongly convex subproblem (`phi` is ignored).
pub struct NonuniformAcd<'s, 'a> {
    sub: &'s Subproblem<'a>,
    sampler: BlockSampler,
    scale: Vec<f64>,
    alpha: f64,
    beta: f64,
    gamma: f64,
    option: AcdOption,
    x: CachedPoint,
    z: CachedPoint,
    y: CachedPoint,
    grad: Vec<f64>,
    block: Vec<f64>,
    since_refresh: usize,
}

/// `mu_s` of the proximal-point subproblem with respect to `||.||_[s]`
/// weighted by the subproblem's block constants.
pub fn mu_s(sub: &Subproblem<'_>, s: f64) -> f64 {
    let lt_max = sub.lt.iter().cloned().fold(0.0, f64::max);
    sub.mu_tilde * lt_max / lt_max.powf(s)
}

/// `(alpha, beta, gamma)` of the constant schedule.
pub fn acd_constants(mu_s: f64, t: f64) -> (f64, f64, f64) {
    let r = mu_s.sqrt();
    (r / (r + t), r * t, mu_s)
}

impl<'s, 'a> NonuniformAcd<'s, 'a> {
    pub fn new(sub: &'s Subproblem<'a>, x0: CachedPoint, s: f64, option: AcdOption) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::InvalidParameter(format!("sampling exponent s must lie in [0, 1], got {s}")));
        }
        // strong convexity in ||.||_[s] cannot exceed the smallest lt_i^(1-s)
        let ms = mu_s(sub, s);
        let cap = sub.lt.iter().map(|l| l.powf(1.0 - s)).fold(f64::INFINITY, f64::min);
        if !(ms > 0.0 && ms <= cap * (1.0 + 1e-12)) {
            return Err(Error::InvalidParameter(format!("mu_s must lie in (0, {cap}], got {ms}")));
        }
        // blocks at the Lipschitz floor are excluded from sampling
        let floor = crate::oracles::LIPSCHITZ_FLOOR;
        let weights: Vec<f64> = sub
            .lt
            .iter()
            .map(|&l| if l <= floor { 0.0 } else { l.powf((1.0 - s) / 2.0) })
            .collect();
        let t: f64 = weights.iter().sum();
        let sampler = BlockSampler::weighted(&weights)?;
        let (alpha, beta, gamma) = acd_constants(ms, t);
        Ok(Self {
            sub,
            scale: sub.lt.iter().map(|&l| l.powf(s)).collect(),
            sampler,
            alpha,
            beta,
            gamma,
            option,
            z: x0.clone(),
            y: x0.clone(),
            x: x0,
            grad: Vec::new(),
            block: Vec::new(),
            since_refresh: 0,
        })
    }

    pub fn constants(&self) -> (f64, f64, f64) {
        (self.alpha, self.beta, self.gamma)
    }

    pub fn sampler(&self) -> &BlockSampler {
        &self.sampler
    }

    pub fn x(&self) -> &CachedPoint {
        &self.x
    }

    pub fn into_x(mut self) -> CachedPoint {
        self.sub.problem.oracle.refresh(&mut self.x);
        self.x
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R, counters: &mut Counters) -> Result<()> {
        let problem = self.sub.problem;
        let part = problem.partition();
        let (a, b, g) = (self.alpha, self.beta, self.gamma);

        self.y.set_lincomb(1.0 - a, &self.x, a, &self.z);
        let i = self.sampler.sample(rng);
        let pi = self.sampler.prob(i);
        let r = part.range(i);
        self.grad.resize(r.len(), 0.0);
        self.sub.block_gradient_into(&self.y, i, &mut self.grad)?;
        counters.block_evals += 1;
        counters.passes += problem.block_pass(i);

        // z+ = (g y + b z)/(g + b) everywhere, minus a gradient step on block i
        let c = 1.0 / (g + b);
        let step = c / (pi * self.scale[i]);
        self.block.resize(r.len(), 0.0);
        {
            let (y, z) = (self.y.x(), self.z.x());
            for ((d, j), gr) in self.block.iter_mut().zip(r.clone()).zip(&self.grad) {
                *d = (b * c * z[j] + g * c * y[j] - step * gr) - z[j];
            }
        }
        self.z.lincomb_assign(b * c, g * c, &self.y);
        for v in self.grad.iter_mut() {
            *v *= -step;
        }
        problem.oracle.apply_block_step(&mut self.z, part, i, &self.grad)?;

        self.x.clone_from(&self.y);
        for d in self.block.iter_mut() {
            *d *= a / pi;
        }
        problem.oracle.apply_block_step(&mut self.x, part, i, &self.block)?;

        if self.option == AcdOption::I {
            self.sub.block_gradient_into(&self.x, i, &mut self.grad)?;
            counters.block_evals += 1;
            counters.passes += problem.block_pass(i);
            let li = self.sub.lt[i];
            for v in self.grad.iter_mut() {
                *v = -*v / li;
            }
            problem.oracle.apply_block_step(&mut self.x, part, i, &self.grad)?;
        }

        self.since_refresh += 1;
        if self.since_refresh >= 16 * part.num_blocks().max(64) {
            problem.oracle.refresh(&mut self.x);
            problem.oracle.refresh(&mut self.z);
            self.since_refresh = 0;
        }
        Ok(())
    }
}
