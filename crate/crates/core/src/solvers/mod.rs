//! The outer solvers and their shared configuration and trace types.

mod acpdc;
mod acpp;
mod dc;
pub mod inner;
mod rcsd;
mod rpcd;
pub mod theory;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

pub use acpdc::acpdc;
pub use acpp::{acpp, acpp_smooth};
pub use dc::{dca, pdca, pdca_e};
pub use inner::{apcg, apcg_certified, AcdOption, Apcg, NonuniformAcd, Subproblem};
pub use rcsd::rcsd;
pub use rpcd::rpcd;

use crate::error::{Error, Result};
use crate::measures;
use crate::oracles::CachedPoint;
use crate::problem::CompositeProblem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Rcsd,
    Rpcd,
    Dca,
    Pdca,
    PdcaE,
    Acpdc,
    Acpp,
    AcppSmooth,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::Rcsd,
        Algorithm::Rpcd,
        Algorithm::Dca,
        Algorithm::Pdca,
        Algorithm::PdcaE,
        Algorithm::Acpdc,
        Algorithm::Acpp,
        Algorithm::AcppSmooth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Rcsd => "rcsd",
            Algorithm::Rpcd => "rpcd",
            Algorithm::Dca => "dca",
            Algorithm::Pdca => "pdca",
            Algorithm::PdcaE => "pdca_e",
            Algorithm::Acpdc => "acpdc",
            Algorithm::Acpp => "acpp",
            Algorithm::AcppSmooth => "acpp_smooth",
        }
    }

    /// Measure recorded in the trace when the config asks for the default.
    pub fn default_measure(self) -> MeasureKind {
        match self {
            Algorithm::Acpdc => MeasureKind::ProxMapping,
            Algorithm::AcppSmooth => MeasureKind::Gradient,
            _ => MeasureKind::Subgradient,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|a| a.name() == key)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PermutationMode {
    #[default]
    RandomShuffle,
    FixedCycle,
}

impl FromStr for PermutationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "random_shuffle" | "shuffle" => Ok(Self::RandomShuffle),
            "fixed_cycle" | "cycle" => Ok(Self::FixedCycle),
            _ => Err(Error::InvalidParameter(format!("unknown permutation mode `{s}`"))),
        }
    }
}

impl FromStr for AcdOption {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "I" | "i" | "1" => Ok(Self::I),
            "II" | "ii" | "2" => Ok(Self::II),
            _ => Err(Error::InvalidParameter(format!("unknown option `{s}`, expected I or II"))),
        }
    }
}

/// Optimality measure written to the trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MeasureKind {
    /// Per-algorithm default, see [`Algorithm::default_measure`].
    #[default]
    Auto,
    /// `||g(x)||^2_[s],*` of the composite subgradient.
    Subgradient,
    /// `||p(x, v, mu)||^2_[1],*` of the prox-mapping.
    ProxMapping,
    /// `||grad F(x)||^2`, for smooth problems.
    Gradient,
    None,
}

impl FromStr for MeasureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "auto" => Ok(Self::Auto),
            "subgradient" => Ok(Self::Subgradient),
            "prox_mapping" => Ok(Self::ProxMapping),
            "gradient" => Ok(Self::Gradient),
            "none" => Ok(Self::None),
            _ => Err(Error::InvalidParameter(format!("unknown measure `{s}`"))),
        }
    }
}

/// Inner iteration count `t` of the two-level methods.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum InnerIters {
    /// `t = m`.
    #[default]
    Blocks,
    /// The theoretical `t_0` of the algorithm.
    Theory,
    Fixed(usize),
}

impl FromStr for InnerIters {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "m" | "blocks" => Ok(Self::Blocks),
            "t0" | "theory" => Ok(Self::Theory),
            v => v
                .parse::<usize>()
                .ok()
                .filter(|&t| t >= 1)
                .map(Self::Fixed)
                .ok_or_else(|| Error::InvalidParameter(format!("inner iterations must be m, t0 or a positive count, got `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    /// Iteration budget `K`: single-block iterations for rcsd, outer
    /// iterations for every other method.
    pub max_iters: usize,
    /// Stop once this many data passes have been spent.
    pub max_passes: Option<f64>,
    pub inner_iters: InnerIters,
    /// Sampling exponent.
    pub s: f64,
    /// `gamma_i = gamma_scale * L_i`.
    pub gamma_scale: f64,
    /// Proximal weight of acpdc / acpp; the weak convexity modulus is used
    /// for acpp when this is zero.
    pub mu: f64,
    pub seed: u64,
    pub permutation: PermutationMode,
    pub acd_option: AcdOption,
    /// Trace interval in data passes.
    pub trace_every: f64,
    pub measure: MeasureKind,
    /// Certified gap for prox-mapping measures.
    pub measure_tol: f64,
    /// Stop once the trace measure drops to this value.
    pub target_measure: Option<f64>,
    /// Restart period of the extrapolated proximal DC method.
    pub restart_every: usize,
    /// Certified gap of the exact DC subproblem solves.
    pub dca_tol: f64,
    /// Proximal floor added to the DC subproblem.
    pub dca_floor: f64,
    /// Iteration cap of each certified inner solve; default
    /// `50 m ceil(1/sqrt(mu_tilde))`.
    pub inner_budget: Option<usize>,
    /// Record wall-clock nanoseconds; off keeps traces reproducible.
    pub record_wall_time: bool,
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            max_iters: 100,
            max_passes: None,
            inner_iters: InnerIters::Blocks,
            s: 1.0,
            gamma_scale: 1.0,
            mu: 0.0,
            seed: 0,
            permutation: PermutationMode::RandomShuffle,
            acd_option: AcdOption::II,
            trace_every: 1.0,
            measure: MeasureKind::Auto,
            measure_tol: 1e-10,
            target_measure: None,
            restart_every: 200,
            dca_tol: 1e-10,
            dca_floor: 1e-6,
            inner_budget: None,
            record_wall_time: false,
        }
    }

    pub fn measure_kind(&self) -> MeasureKind {
        match self.measure {
            MeasureKind::Auto => self.algorithm.default_measure(),
            m => m,
        }
    }

    /// Lists every violated invariant.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.max_iters == 0 {
            v.push("iteration budget K must be at least 1".to_string());
        }
        if !(0.0..=1.0).contains(&self.s) {
            v.push(format!("sampling exponent s = {} must lie in [0, 1]", self.s));
        }
        if !(self.gamma_scale > 0.5 && self.gamma_scale.is_finite()) {
            v.push(format!(
                "gamma_scale = {} must exceed 1/2 (steps gamma_i > L_i/2)",
                self.gamma_scale
            ));
        }
        if self.algorithm == Algorithm::Rpcd && self.gamma_scale < 1.0 {
            v.push(format!("rpcd needs gamma_scale >= 1, got {}", self.gamma_scale));
        }
        if matches!(self.algorithm, Algorithm::Acpdc) && !(self.mu > 0.0 && self.mu.is_finite()) {
            v.push(format!("{} needs mu > 0, got {}", self.algorithm, self.mu));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            v.push(format!("mu must be nonnegative, got {}", self.mu));
        }
        if let InnerIters::Fixed(0) = self.inner_iters {
            v.push("inner iterations t must be at least 1".to_string());
        }
        if let Some(p) = self.max_passes {
            if !(p > 0.0) {
                v.push(format!("pass budget must be positive, got {p}"));
            }
        }
        if !(self.trace_every > 0.0 && self.trace_every.is_finite()) {
            v.push(format!("trace interval must be positive, got {}", self.trace_every));
        }
        if self.restart_every == 0 {
            v.push("restart period must be at least 1".to_string());
        }
        if !(self.measure_tol > 0.0 && self.dca_tol > 0.0 && self.dca_floor > 0.0) {
            v.push("tolerances must be positive".to_string());
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(v.join("; ")))
        }
    }
}

/// One trace row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRecord {
    pub outer_iter: usize,
    pub passes: f64,
    pub objective: f64,
    pub measure: f64,
    /// `||x^{k+1} - x^k||^2_[1]` of the latest step.
    pub step_sq: f64,
    pub wall_ns: u64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

/// Work counters shared by every solver.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Counters {
    /// Block gradients evaluated (a full gradient counts `m`).
    pub block_evals: u64,
    /// Data passes of gradient work.
    pub passes: f64,
}

/// Per outer iteration bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OuterRecord {
    pub iter: usize,
    pub objective_before: f64,
    pub objective_after: f64,
    /// `||x^{k+1} - x^k||^2_[1]`.
    pub step_sq_weighted: f64,
    /// `||x^{k+1} - x^k||^2`.
    pub step_sq: f64,
    /// Objective of the outer model at `x^k` and `x^{k+1}` (acpp: `F_k`).
    pub model_before: f64,
    pub model_after: f64,
}

/// Point of the proximal point methods returned at a random outer index.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledIterate {
    pub k_hat: usize,
    pub x_prev: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunStats {
    pub iterations: usize,
    pub counters: Counters,
    pub initial_objective: f64,
    pub final_objective: f64,
    /// rcsd: `sum_k (gamma_{i_k} - L_{i_k}/2) ||x^{k+1} - x^k||^2`.
    pub descent_sum: f64,
    /// rcsd: `sum_k (F(x^k) - F(x^{k+1}))` accumulated step by step.
    pub decrease_sum: f64,
    /// rcsd: smallest measure recorded.
    pub best_measure: f64,
    /// rpcd: `sum_k ||grad f(x^k) - v^k||^2`, when `phi = 0`.
    pub grad_residual_sum: f64,
    pub outer: Vec<OuterRecord>,
    /// Block evaluations spent when the measure first reached the target.
    pub evals_to_target: Option<u64>,
    /// Whether the measure reached the target.
    pub reached_target: bool,
}

#[derive(Clone, Debug)]
pub struct SolverOutput {
    pub x: Vec<f64>,
    pub trace: Trace,
    pub stats: RunStats,
    pub sampled: Option<SampledIterate>,
}

/// Runs the configured algorithm from `x0`.
pub fn solve(problem: &CompositeProblem, x0: &[f64], config: &SolverConfig) -> Result<SolverOutput> {
    config.validate()?;
    match config.algorithm {
        Algorithm::Rcsd => rcsd(problem, x0, config),
        Algorithm::Rpcd => rpcd(problem, x0, config),
        Algorithm::Dca => dca(problem, x0, config),
        Algorithm::Pdca => pdca(problem, x0, config),
        Algorithm::PdcaE => pdca_e(problem, x0, config),
        Algorithm::Acpdc => acpdc(problem, x0, config),
        Algorithm::Acpp => acpp(problem, x0, config),
        Algorithm::AcppSmooth => acpp_smooth(problem, x0, config),
    }
}

/// Shared trace emission and stopping logic.
pub(crate) struct Recorder<'p> {
    problem: &'p CompositeProblem,
    config: &'p SolverConfig,
    kind: MeasureKind,
    start: Instant,
    next_pass: f64,
    pub(crate) trace: Trace,
    pub(crate) stats: RunStats,
    keep_min: bool,
}

impl<'p> Recorder<'p> {
    pub(crate) fn new(problem: &'p CompositeProblem, config: &'p SolverConfig, keep_min: bool) -> Self {
        Self {
            problem,
            config,
            kind: config.measure_kind(),
            start: Instant::now(),
            next_pass: 0.0,
            trace: Trace::default(),
            stats: RunStats {
                best_measure: f64::INFINITY,
                ..RunStats::default()
            },
            keep_min,
        }
    }

    pub(crate) fn due(&self, counters: &Counters) -> bool {
        counters.passes >= self.next_pass
    }

    /// Evaluates the measure at `p`.
    pub(crate) fn measure(&self, p: &CachedPoint) -> Result<f64> {
        let cfg = self.config;
        match self.kind {
            MeasureKind::None | MeasureKind::Auto => Ok(f64::NAN),
            MeasureKind::Subgradient => measures::criticality_gap(self.problem, p, cfg.gamma_scale, cfg.s).map(|g| g * g),
            MeasureKind::Gradient => measures::gradient_norm_sq(self.problem, p),
            MeasureKind::ProxMapping => {
                let mu = if cfg.mu > 0.0 { cfg.mu } else { 1.0 };
                let v = self.problem.h.subgrad(p.x())?;
                let rep = measures::prox_point_measure_at(self.problem, p, v, mu, cfg.measure_tol, cfg.inner_budget, cfg.seed)?;
                Ok(rep.p_norm_dual_1 * rep.p_norm_dual_1)
            }
        }
    }

    /// Records a row; returns `true` when the measure target is reached.
    pub(crate) fn record(
        &mut self,
        outer_iter: usize,
        p: &CachedPoint,
        objective: f64,
        step_sq: f64,
        counters: &Counters,
    ) -> Result<bool> {
        let mut m = self.measure(p)?;
        if m < self.stats.best_measure {
            self.stats.best_measure = m;
        }
        if self.keep_min && self.stats.best_measure.is_finite() {
            m = self.stats.best_measure;
        }
        let wall_ns = if self.config.record_wall_time {
            self.start.elapsed().as_nanos() as u64
        } else {
            0
        };
        self.trace.records.push(TraceRecord {
            outer_iter,
            passes: counters.passes,
            objective,
            measure: m,
            step_sq,
            wall_ns,
        });
        let step = self.config.trace_every;
        if self.next_pass <= counters.passes {
            self.next_pass = ((counters.passes / step).floor() + 1.0) * step;
        }
        let hit = matches!(self.config.target_measure, Some(t) if m <= t);
        if hit && self.stats.evals_to_target.is_none() {
            self.stats.evals_to_target = Some(counters.block_evals);
            self.stats.reached_target = true;
        }
        Ok(hit)
    }

    pub(crate) fn out_of_budget(&self, counters: &Counters, iters: usize) -> bool {
        iters >= self.config.max_iters || matches!(self.config.max_passes, Some(b) if counters.passes >= b)
    }

    pub(crate) fn finish(
        mut self,
        x: Vec<f64>,
        counters: Counters,
        iterations: usize,
        final_objective: f64,
        sampled: Option<SampledIterate>,
    ) -> SolverOutput {
        self.stats.iterations = iterations;
        self.stats.counters = counters;
        self.stats.final_objective = final_objective;
        SolverOutput {
            x,
            trace: self.trace,
            stats: self.stats,
            sampled,
        }
    }
}

/// Blockwise composite proximal step `x_i <- P_i(x_i, g_i, gamma_i)` written
/// as an increment, so callers apply it through the cache.
pub(crate) fn prox_increment(
    phi: &crate::regularizers::SeparablePhi,
    x: &[f64],
    g: &[f64],
    gamma: f64,
    out: &mut [f64],
) -> Result<()> {
    phi.prox_into(x, g, gamma, out)?;
    for (o, &xi) in out.iter_mut().zip(x) {
        *o -= xi;
    }
    Ok(())
}

/// Lists the requirements of `config.algorithm` that `problem` violates.
pub fn problem_violations(problem: &CompositeProblem, config: &SolverConfig) -> Vec<String> {
    let mut v = Vec::new();
    let alg = config.algorithm;
    let convex_f = problem.weak_convexity_mu == 0.0;
    if matches!(alg, Algorithm::Acpdc | Algorithm::Dca) && !convex_f {
        v.push(format!("{alg} needs convex f (weak convexity modulus {})", problem.weak_convexity_mu));
    }
    match alg {
        Algorithm::Acpp if !problem.h.is_zero() => v.push("acpp needs h = 0".to_string()),
        Algorithm::AcppSmooth if !problem.h.is_zero() || !problem.phi.is_zero() => {
            v.push("acpp_smooth needs phi = 0 and h = 0".to_string())
        }
        _ => {}
    }
    if matches!(alg, Algorithm::Acpp | Algorithm::AcppSmooth) {
        if let Err(e) = acpp::proximal_weight(problem, config) {
            v.push(e.to_string());
        }
    }
    if config.measure_kind() == MeasureKind::ProxMapping && !convex_f {
        v.push("the prox-mapping measure needs convex f".to_string());
    }
    v
}

/// The theoretical inner iteration count `t_0` of the two-level methods,
/// `None` for single-level ones.
pub fn theory_t0(problem: &CompositeProblem, config: &SolverConfig) -> Result<Option<usize>> {
    let part = problem.partition();
    Ok(match config.algorithm {
        Algorithm::Acpdc => Some(theory::acpdc_t0(config.mu, part.num_blocks())),
        Algorithm::Acpp => {
            let mu = acpp::proximal_weight(problem, config)?;
            Some(theory::acpp_t0(mu, problem.global_lipschitz(), part.l_max(), part.num_blocks()))
        }
        Algorithm::AcppSmooth => {
            let mu = acpp::proximal_weight(problem, config)?;
            Some(theory::acpp_smooth_t0(mu, problem.global_lipschitz(), part.lipschitz(), config.s))
        }
        _ => None,
    })
}

/// The inner iteration count `t` a two-level method will use.
pub fn inner_iteration_count(problem: &CompositeProblem, config: &SolverConfig) -> Result<Option<usize>> {
    Ok(theory_t0(problem, config)?.map(|t0| inner_iters(problem, config, || t0)))
}

/// Resolves `t` for an algorithm.
pub(crate) fn inner_iters(problem: &CompositeProblem, config: &SolverConfig, theory_t0: impl FnOnce() -> usize) -> usize {
    match config.inner_iters {
        InnerIters::Blocks => problem.num_blocks(),
        InnerIters::Theory => theory_t0().max(1),
        InnerIters::Fixed(t) => t,
    }
}
