use std::fs;
use std::path::{Path, PathBuf};

use ncd_opt::data::write_sparse_dataset;
use ncd_opt::measures;
use ncd_opt::{solve, SolverConfig};
use rayon::prelude::*;

use crate::config::{DataSource, Experiment, RawConfig};
use crate::error::CliError;
use crate::instance::{self, Instance};
use crate::output::{self, fmt_num, RunData, RunRecord};

pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const ITERATE_DIR: &str = "iterates";

/// File name of the trace of `run_id`.
pub fn trace_file(run_id: &str) -> String {
    format!("trace_{run_id}.csv")
}

/// Loads the instance and checks the algorithm/problem combination.
fn prepare(exp: &Experiment) -> Result<Instance, CliError> {
    let inst = instance::load(exp)?;
    let v = instance::violations(exp, &inst);
    if v.is_empty() {
        Ok(inst)
    } else {
        Err(CliError::Config(v))
    }
}

/// Checks the config and returns the report of derived quantities.
pub fn validate(exp: &Experiment) -> Result<String, CliError> {
    let inst = prepare(exp)?;
    Ok(instance::describe(exp, &inst))
}

/// Outcome of `run`.
pub struct RunSummary {
    pub runs: Vec<RunRecord>,
    pub out_dir: PathBuf,
}

impl RunSummary {
    pub fn failed(&self) -> usize {
        self.runs.iter().filter(|r| r.outcome.is_err()).count()
    }
}

/// Runs every (algorithm, replication) pair on a pool of `threads` workers
/// (`None`: one per logical core) and writes traces, the aggregate and the
/// summary under `out_dir`. Solver failures are recorded per run.
pub fn run(exp: &Experiment, raw: &RawConfig, out_dir: &Path, threads: Option<usize>) -> Result<RunSummary, CliError> {
    let inst = prepare(exp)?;
    let problem = &inst.problem;
    fs::create_dir_all(out_dir.join(ITERATE_DIR))
        .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", out_dir.display())))?;

    let jobs: Vec<(SolverConfig, usize)> = exp
        .solvers
        .iter()
        .flat_map(|c| (0..exp.replications).map(move |r| (c.clone(), r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(CliError::runtime)?;
    let x0 = vec![0.0; problem.dim()];
    // collect keeps job order, so output never depends on scheduling
    let runs: Vec<RunRecord> = pool.install(|| {
        jobs.into_par_iter()
            .map(|(mut config, r)| {
                config.seed = exp.run_seed(r);
                let outcome = solve(problem, &x0, &config)
                    .map(|out| RunData {
                        iterations: out.stats.iterations,
                        passes: out.stats.counters.passes,
                        final_objective: out.stats.final_objective,
                        best_measure: out.stats.best_measure,
                        trace: out.trace.records,
                        x: out.x,
                    })
                    .map_err(|e| e.to_string());
                RunRecord {
                    run_id: format!("{}-{r:02}", config.algorithm),
                    algorithm: config.algorithm,
                    replication: r,
                    seed: config.seed,
                    outcome,
                }
            })
            .collect()
    });

    for run in &runs {
        output::write_trace(&out_dir.join(trace_file(&run.run_id)), run)?;
        if let Ok(data) = &run.outcome {
            write_vector(&out_dir.join(ITERATE_DIR).join(format!("{}.txt", run.run_id)), &data.x)?;
        }
    }
    let algorithms: Vec<_> = exp.solvers.iter().map(|c| c.algorithm).collect();
    output::write_aggregate(&out_dir.join(AGGREGATE_FILE), &algorithms, &runs)?;
    let text = output::summary(raw.entries(), &algorithms, &runs);
    fs::write(out_dir.join(SUMMARY_FILE), text).map_err(|e| CliError::runtime(format!("{SUMMARY_FILE}: {e}")))?;
    Ok(RunSummary {
        runs,
        out_dir: out_dir.to_path_buf(),
    })
}

/// Writes the synthetic dataset (`data.txt`) and its planted solution
/// (`x_true.txt`).
pub fn gen_data(exp: &Experiment, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    if !matches!(exp.source, DataSource::Synthetic(_)) {
        return Err(CliError::config("gen-data needs a synthetic source; remove `data`"));
    }
    let inst = instance::load(exp)?;
    fs::create_dir_all(out_dir).map_err(|e| CliError::runtime(format!("cannot create {}: {e}", out_dir.display())))?;
    let data = out_dir.join("data.txt");
    write_sparse_dataset(&data, &inst.matrix, &inst.targets).map_err(CliError::runtime)?;
    let mut written = vec![data];
    if let Some(x) = &inst.x_true {
        let p = out_dir.join("x_true.txt");
        write_vector(&p, x)?;
        written.push(p);
    }
    Ok(written)
}

/// Optimality report for a saved iterate, as `key = value` lines. Uses the
/// solver settings (`gamma_scale`, `s`, `mu`, `measure_tol`) of the first
/// configured algorithm.
pub fn measure(exp: &Experiment, iterate: &Path) -> Result<String, CliError> {
    let inst = instance::load(exp)?;
    let p = &inst.problem;
    let x = read_vector(iterate)?;
    if x.len() != p.dim() {
        return Err(CliError::config(format!(
            "iterate {} has {} entries, the problem has d = {}",
            iterate.display(),
            x.len(),
            p.dim()
        )));
    }
    let c = &exp.solvers[0];
    let rt = CliError::runtime;
    let point = p.oracle.point(x.clone()).map_err(rt)?;
    let mut out = String::new();
    let mut line = |k: &str, v: f64| out.push_str(&format!("{k} = {}\n", fmt_num(v)));
    line("objective", p.objective_at(&point).map_err(rt)?);
    line("gamma_scale", c.gamma_scale);
    line("s", c.s);
    let gap = measures::criticality_gap(p, &point, c.gamma_scale, c.s).map_err(rt)?;
    line("criticality_gap", gap);
    line("criticality_gap_sq", gap * gap);
    line("grad_residual_sq", measures::gradient_norm_sq(p, &point).map_err(rt)?);
    if let Some(m) = measures::h_subgradient_bound(&p.h.kind, p.h.scale, p.dim()) {
        line("h_subgradient_bound", m);
    }
    if p.weak_convexity_mu == 0.0 && c.mu > 0.0 {
        let v = p.h_subgrad(&x).map_err(rt)?;
        let rep = measures::prox_point_measure_at(p, &point, v, c.mu, c.measure_tol, c.inner_budget, c.seed)
            .map_err(rt)?;
        line("mu", c.mu);
        line("prox_mapping_norm", rep.p_norm_dual_1);
        line("prox_mapping_sq", rep.p_norm_dual_1 * rep.p_norm_dual_1);
        line("inner_gap", rep.inner_gap);
    }
    Ok(out)
}

/// One value per line, shortest round-trip formatting.
pub fn write_vector(path: &Path, x: &[f64]) -> Result<(), CliError> {
    let text: String = x.iter().map(|v| format!("{}\n", fmt_num(*v))).collect();
    fs::write(path, text).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    text.split_ascii_whitespace()
        .enumerate()
        .map(|(i, t)| {
            t.parse::<f64>()
                .map_err(|_| CliError::config(format!("{}: entry {} is not a number: {t:?}", path.display(), i + 1)))
        })
        .collect()
}
