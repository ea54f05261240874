//! Turning an [`Experiment`] into a concrete problem.

use std::fmt::Write as _;
use std::sync::Arc;

use ncd_opt::data::{
    binarize_labels, gen_synthetic, normalize_binary_labels, read_sparse_dataset, rescale_targets, sign_labels,
};
use ncd_opt::oracles::{DataMatrix, LossKind, SmoothOracle};
use ncd_opt::regularizers::{ConcaveH, SeparablePhi};
use ncd_opt::solvers::{self, theory, Algorithm};
use ncd_opt::CompositeProblem;

use crate::config::{DataSource, Experiment, LossChoice, Penalty};
use crate::error::CliError;

/// A loaded problem and the data it was built from.
pub struct Instance {
    pub problem: CompositeProblem,
    pub matrix: Arc<DataMatrix>,
    /// Targets or `+-1` labels fed to the loss.
    pub targets: Vec<f64>,
    /// Planted solution of synthetic data.
    pub x_true: Option<Vec<f64>>,
}

/// Loads the data and assembles the problem. Every failure here is a
/// configuration error: nothing has been computed yet.
pub fn load(exp: &Experiment) -> Result<Instance, CliError> {
    let (matrix, mut targets, x_true) = match &exp.source {
        DataSource::Synthetic(spec) => {
            let syn = gen_synthetic(spec).map_err(|e| CliError::config(e.to_string()))?;
            let t = if exp.loss == LossChoice::Logistic {
                sign_labels(&syn.targets)
            } else {
                syn.targets
            };
            (syn.matrix, t, Some(syn.x_true))
        }
        DataSource::File(path) => {
            let ds = read_sparse_dataset(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
            (ds.matrix, ds.labels, None)
        }
    };
    if let Some(pos) = &exp.positive_labels {
        targets = binarize_labels(&targets, pos);
    } else if exp.loss == LossChoice::Logistic {
        targets = normalize_binary_labels(&targets);
    }
    if let Some((lo, hi)) = exp.rescale {
        targets = rescale_targets(&targets, lo, hi);
    }

    let d = matrix.ncols();
    let m = exp.m.unwrap_or(d.min(1000));
    if m > d {
        return Err(CliError::config(format!("block count m = {m} exceeds the dimension d = {d}")));
    }
    let cfg = |e: ncd_opt::Error| CliError::config(e.to_string());
    let loss = match exp.loss {
        LossChoice::LeastSquares => LossKind::LeastSquares,
        LossChoice::Logistic => LossKind::Logistic,
        LossChoice::Huber => LossKind::huber(exp.delta).map_err(cfg)?,
    };
    let matrix = Arc::new(matrix);
    let oracle = SmoothOracle::new(loss, Arc::clone(&matrix), targets.clone())
        .map_err(cfg)?
        .with_ridge(exp.ridge);
    let (phi, h) = penalty(exp, d).map_err(cfg)?;
    let problem = CompositeProblem::new(oracle, phi, h, m).map_err(cfg)?;
    Ok(Instance {
        problem,
        matrix,
        targets,
        x_true,
    })
}

/// `(rho/d) phi` and `(rho/d) h` of the configured penalty.
fn penalty(exp: &Experiment, d: usize) -> ncd_opt::Result<(SeparablePhi, ConcaveH)> {
    let w = exp.rho / d as f64;
    let l1 = || SeparablePhi::l1(exp.lambda)?.scaled(w);
    Ok(match exp.penalty {
        Penalty::None => (SeparablePhi::zero(), ConcaveH::zero()),
        Penalty::L1 => (l1()?, ConcaveH::zero()),
        Penalty::LargestK => (l1()?, ConcaveH::largest_k(exp.lambda, exp.k)?.scaled(w)?),
        Penalty::Scad => (l1()?, ConcaveH::scad(exp.lambda, exp.theta)?.scaled(w)?),
    })
}

/// Problem-dependent violations of the configured algorithms.
pub fn violations(exp: &Experiment, inst: &Instance) -> Vec<String> {
    exp.solvers
        .iter()
        .flat_map(|c| solvers::problem_violations(&inst.problem, c))
        .collect()
}

/// Derived quantities printed by `validate`.
pub fn describe(exp: &Experiment, inst: &Instance) -> String {
    let p = &inst.problem;
    let part = p.partition();
    let l = part.lipschitz();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "data: n = {}, d = {}, nnz = {}, m = {}",
        inst.matrix.nrows(),
        p.dim(),
        inst.matrix.nnz(),
        p.num_blocks()
    );
    let mean = l.iter().sum::<f64>() / l.len() as f64;
    let _ = writeln!(
        out,
        "block Lipschitz: min = {}, mean = {}, max = {}; global L = {}",
        part.l_min(),
        mean,
        part.l_max(),
        p.global_lipschitz()
    );
    if !p.floored_blocks.is_empty() {
        let _ = writeln!(out, "floored (all-zero) blocks: {:?}", p.floored_blocks);
    }
    let _ = writeln!(out, "weak convexity modulus of f: {}", p.weak_convexity_mu);
    for c in &exp.solvers {
        let _ = write!(
            out,
            "{}: s = {}, T_s = {}, T_(1-s) = {}",
            c.algorithm,
            c.s,
            part.t_s(c.s),
            part.t_s(1.0 - c.s)
        );
        match c.algorithm {
            Algorithm::Acpdc => {
                let _ = write!(out, ", mu = {}, mu_tilde = {}", c.mu, theory::acpdc_mu_tilde(c.mu));
            }
            Algorithm::Acpp => {
                let mu = if c.mu > 0.0 { c.mu } else { p.weak_convexity_mu };
                let _ = write!(out, ", mu = {mu}, mu_tilde = {}", theory::acpp_mu_tilde(mu, part.l_max()));
            }
            _ => {}
        }
        if let Ok(Some(t0)) = solvers::theory_t0(p, c) {
            let t = solvers::inner_iteration_count(p, c).ok().flatten().unwrap_or(t0);
            let _ = write!(out, ", t0 = {t0}, t = {t}");
        }
        out.push('\n');
    }
    out
}
