//! CSV traces, the pass-grid aggregate and the text summary.

use std::fmt::Write as _;
use std::path::Path;

use ncd_opt::solvers::{Algorithm, TraceRecord};

use crate::error::CliError;

pub const TRACE_HEADER: [&str; 9] = [
    "run_id",
    "algorithm",
    "seed",
    "outer_iter",
    "passes",
    "objective",
    "measure",
    "step_sq",
    "wall_ns",
];

pub const AGGREGATE_HEADER: [&str; 6] = [
    "algorithm",
    "passes",
    "runs",
    "mean_objective",
    "min_objective",
    "max_objective",
];

/// Shortest round-trip decimal, switching to scientific notation for
/// nonzero magnitudes below `1e-4`.
pub fn fmt_num(v: f64) -> String {
    if v != 0.0 && v.abs() < 1e-4 {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// Result of one (algorithm, replication) pair.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub run_id: String,
    pub algorithm: Algorithm,
    pub replication: usize,
    pub seed: u64,
    pub outcome: Result<RunData, String>,
}

#[derive(Clone, Debug)]
pub struct RunData {
    pub trace: Vec<TraceRecord>,
    pub x: Vec<f64>,
    pub iterations: usize,
    pub passes: f64,
    pub final_objective: f64,
    pub best_measure: f64,
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::runtime(format!("{}: {e}", path.display()))
}

/// Writes the trace of one run; failed runs get a header-only file.
pub fn write_trace(path: &Path, run: &RunRecord) -> Result<(), CliError> {
    let err = csv_err(path);
    let mut w = csv::Writer::from_path(path).map_err(&err)?;
    w.write_record(TRACE_HEADER).map_err(&err)?;
    if let Ok(data) = &run.outcome {
        let alg = run.algorithm.name();
        let seed = run.seed.to_string();
        for r in &data.trace {
            w.write_record([
                run.run_id.as_str(),
                alg,
                seed.as_str(),
                &r.outer_iter.to_string(),
                &fmt_num(r.passes),
                &fmt_num(r.objective),
                &fmt_num(r.measure),
                &fmt_num(r.step_sq),
                &r.wall_ns.to_string(),
            ])
            .map_err(&err)?;
        }
    }
    w.flush().map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

/// One row of the aggregate: objective statistics over the runs of one
/// algorithm at one pass count.
#[derive(Clone, Debug, PartialEq)]
pub struct GridRow {
    pub passes: f64,
    pub runs: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

/// Aggregates traces on the union of their pass values. Each run
/// contributes its last recorded objective at or before the grid point
/// (last value carried forward); runs with no record yet are skipped.
pub fn aggregate(traces: &[&[TraceRecord]]) -> Vec<GridRow> {
    let mut grid: Vec<f64> = traces.iter().flat_map(|t| t.iter().map(|r| r.passes)).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut cursor = vec![0usize; traces.len()];
    let mut rows = Vec::with_capacity(grid.len());
    for &p in &grid {
        let mut vals = Vec::with_capacity(traces.len());
        for (t, c) in traces.iter().zip(cursor.iter_mut()) {
            while *c < t.len() && t[*c].passes <= p {
                *c += 1;
            }
            if *c > 0 {
                vals.push(t[*c - 1].objective);
            }
        }
        if vals.is_empty() {
            continue;
        }
        rows.push(GridRow {
            passes: p,
            runs: vals.len(),
            mean: vals.iter().sum::<f64>() / vals.len() as f64,
            min: vals.iter().copied().fold(f64::INFINITY, f64::min),
            max: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        });
    }
    rows
}

pub fn write_aggregate(path: &Path, algorithms: &[Algorithm], runs: &[RunRecord]) -> Result<(), CliError> {
    let err = csv_err(path);
    let mut w = csv::Writer::from_path(path).map_err(&err)?;
    w.write_record(AGGREGATE_HEADER).map_err(&err)?;
    for &alg in algorithms {
        let traces: Vec<&[TraceRecord]> = runs
            .iter()
            .filter(|r| r.algorithm == alg)
            .filter_map(|r| r.outcome.as_ref().ok().map(|d| d.trace.as_slice()))
            .collect();
        for row in aggregate(&traces) {
            w.write_record([
                alg.name(),
                &fmt_num(row.passes),
                &row.runs.to_string(),
                &fmt_num(row.mean),
                &fmt_num(row.min),
                &fmt_num(row.max),
            ])
            .map_err(&err)?;
        }
    }
    w.flush().map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

/// Human-readable report: config echo, one line per run, then final
/// objective statistics per algorithm.
pub fn summary<'a>(config: impl Iterator<Item = (&'a str, &'a str)>, algorithms: &[Algorithm], runs: &[RunRecord]) -> String {
    let mut s = String::new();
    let failed = runs.iter().filter(|r| r.outcome.is_err()).count();
    let _ = writeln!(s, "config:");
    for (k, v) in config {
        let _ = writeln!(s, "  {k} = {v}");
    }
    let _ = writeln!(s, "\nruns: {} ok, {failed} failed\n", runs.len() - failed);
    let _ = writeln!(
        s,
        "{:<20} {:>8} {:>10} {:>10} {:>24} {:>24}",
        "run_id", "seed", "iters", "passes", "final_objective", "best_measure"
    );
    for r in runs {
        match &r.outcome {
            Ok(d) => {
                let _ = writeln!(
                    s,
                    "{:<20} {:>8} {:>10} {:>10} {:>24} {:>24}",
                    r.run_id,
                    r.seed,
                    d.iterations,
                    fmt_num(d.passes),
                    fmt_num(d.final_objective),
                    fmt_num(d.best_measure)
                );
            }
            Err(e) => {
                let _ = writeln!(s, "{:<20} {:>8} FAILED: {e}", r.run_id, r.seed);
            }
        }
    }
    let _ = writeln!(s, "\nfinal objective by algorithm:");
    for &alg in algorithms {
        let finals: Vec<f64> = runs
            .iter()
            .filter(|r| r.algorithm == alg)
            .filter_map(|r| r.outcome.as_ref().ok().map(|d| d.final_objective))
            .collect();
        if finals.is_empty() {
            let _ = writeln!(s, "  {alg}: no successful runs");
            continue;
        }
        let mean = finals.iter().sum::<f64>() / finals.len() as f64;
        let min = finals.iter().copied().fold(f64::INFINITY, f64::min);
        let max = finals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let _ = writeln!(
            s,
            "  {alg}: mean = {}, min = {}, max = {} over {} runs",
            fmt_num(mean),
            fmt_num(min),
            fmt_num(max),
            finals.len()
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(passes: f64, objective: f64) -> TraceRecord {
        TraceRecord {
            outer_iter: 0,
            passes,
            objective,
            measure: f64::NAN,
            step_sq: 0.0,
            wall_ns: 0,
        }
    }

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(1.5), "1.5");
        assert_eq!(fmt_num(1e-4), "0.0001");
        assert_eq!(fmt_num(2.5e-5), "2.5e-5");
        assert_eq!(fmt_num(-3e-9), "-3e-9");
        assert_eq!(fmt_num(123456.0), "123456");
        assert_eq!(fmt_num(f64::NAN), "NaN");
        for v in [0.1 + 0.2, 1.0 / 3.0, 7.1e-7, 6.02e23] {
            assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn last_value_carried_forward() {
        let a = [rec(0.0, 10.0), rec(1.0, 6.0), rec(2.0, 4.0)];
        let b = [rec(0.0, 8.0), rec(1.5, 5.0)];
        let rows = aggregate(&[&a, &b]);
        let passes: Vec<f64> = rows.iter().map(|r| r.passes).collect();
        assert_eq!(passes, vec![0.0, 1.0, 1.5, 2.0]);
        assert_eq!(rows[0].mean, 9.0);
        // b has not moved at 1.0
        assert_eq!((rows[1].min, rows[1].max), (6.0, 8.0));
        assert_eq!((rows[2].min, rows[2].max), (5.0, 6.0));
        assert_eq!((rows[3].mean, rows[3].runs), (4.5, 2));
    }

    #[test]
    fn late_starting_runs_are_skipped_until_first_record() {
        let a = [rec(0.0, 1.0)];
        let b = [rec(0.5, 3.0)];
        let rows = aggregate(&[&a, &b]);
        assert_eq!(rows[0].runs, 1);
        assert_eq!(rows[1].runs, 2);
        assert!(aggregate(&[]).is_empty());
    }
}
