//! Flat `key = value` experiment manifests.
//!
//! ```text
//! # huber regression with a scad penalty on synthetic data
//! preset = huber_scad
//! n = 200
//! d = 1000
//! algorithms = rcsd, acpdc, pdca, pdca_e
//! replications = 10
//! max_passes = 30
//! acpdc.inner_iters = t0
//! ```
//!
//! Solver keys may be prefixed with an algorithm name (`acpdc.mu = 0.05`) to
//! apply to that algorithm only; unprefixed solver keys apply to all.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ncd_opt::data::SyntheticSpec;
use ncd_opt::solvers::{Algorithm, InnerIters};
use ncd_opt::SolverConfig;

use crate::error::CliError;

/// Keys describing the problem and the run protocol.
pub const EXPERIMENT_KEYS: &[&str] = &[
    "preset",
    "data",
    "positive_labels",
    "rescale",
    "n",
    "d",
    "s_true",
    "rho_corr",
    "noise_sigma",
    "data_seed",
    "loss",
    "penalty",
    "rho",
    "lambda",
    "theta",
    "k",
    "delta",
    "ridge",
    "m",
    "algorithms",
    "replications",
    "seed",
];

/// Keys forwarded to [`SolverConfig`], optionally prefixed by `<algorithm>.`.
pub const SOLVER_KEYS: &[&str] = &[
    "max_iters",
    "max_passes",
    "inner_iters",
    "s",
    "gamma_scale",
    "mu",
    "permutation",
    "acd_option",
    "trace_every",
    "measure",
    "measure_tol",
    "target_measure",
    "restart_every",
    "dca_tol",
    "dca_floor",
    "inner_budget",
    "record_wall_time",
];

/// Unvalidated key/value pairs plus the directory relative paths resolve
/// against.
#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
    base_dir: PathBuf,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut raw = RawConfig::default();
        let mut errors = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            match split_pair(content) {
                Some((k, v)) => {
                    if raw.values.insert(k.to_string(), v.to_string()).is_some() {
                        errors.push(format!("line {}: duplicate key `{k}`", i + 1));
                    }
                }
                None => errors.push(format!("line {}: expected `key = value`, got {content:?}", i + 1)),
            }
        }
        if errors.is_empty() {
            Ok(raw)
        } else {
            Err(CliError::Config(errors))
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        let mut raw = Self::parse(&text)?;
        raw.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(raw)
    }

    /// Applies a `key=value` override.
    pub fn set(&mut self, pair: &str) -> Result<(), CliError> {
        let (k, v) = split_pair(pair).ok_or_else(|| CliError::config(format!("--set expects KEY=VALUE, got {pair:?}")))?;
        self.values.insert(k.to_string(), v.to_string());
        Ok(())
    }

    pub fn insert(&mut self, key: &str, value: impl ToString) {
        self.values.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn resolve_path(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

fn split_pair(s: &str) -> Option<(&str, &str)> {
    let (k, v) = s.split_once('=')?;
    let (k, v) = (k.trim(), v.trim());
    (!k.is_empty() && !v.is_empty()).then_some((k, v))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// Least squares on the equicorrelated design with `l1 - largest_k`.
    SyntheticLsq,
    /// Huber regression with the scad penalty.
    HuberScad,
    /// Logistic classification with `l1 - largest_k`.
    LogisticLargestK,
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "synthetic_lsq" | "synthetic" => Ok(Preset::SyntheticLsq),
            "huber_scad" => Ok(Preset::HuberScad),
            "logistic_largest_k" | "logistic" => Ok(Preset::LogisticLargestK),
            _ => Err(format!("unknown preset `{s}` (synthetic_lsq, huber_scad, logistic_largest_k)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossChoice {
    LeastSquares,
    Logistic,
    Huber,
}

impl FromStr for LossChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "least_squares" | "lsq" => Ok(LossChoice::LeastSquares),
            "logistic" => Ok(LossChoice::Logistic),
            "huber" => Ok(LossChoice::Huber),
            _ => Err(format!("unknown loss `{s}` (least_squares, logistic, huber)")),
        }
    }
}

/// Nonsmooth part `(rho/d) (phi - h)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Penalty {
    None,
    L1,
    /// `lambda (||x||_1 - |||x|||_k)`.
    LargestK,
    /// `lambda |x| - h_scad`.
    Scad,
}

impl FromStr for Penalty {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(Penalty::None),
            "l1" => Ok(Penalty::L1),
            "largest_k" => Ok(Penalty::LargestK),
            "scad" => Ok(Penalty::Scad),
            _ => Err(format!("unknown penalty `{s}` (none, l1, largest_k, scad)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    Synthetic(SyntheticSpec),
    File(PathBuf),
}

/// A fully parsed experiment.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub preset: Preset,
    pub source: DataSource,
    /// Labels mapped to `+1`, all others to `-1`.
    pub positive_labels: Option<Vec<f64>>,
    pub rescale: Option<(f64, f64)>,
    pub loss: LossChoice,
    pub penalty: Penalty,
    pub rho: f64,
    pub lambda: f64,
    pub theta: f64,
    pub k: usize,
    pub delta: f64,
    pub ridge: f64,
    /// Block count; `min(1000, d)` when unset.
    pub m: Option<usize>,
    /// One config per algorithm; the seed is set per replication.
    pub solvers: Vec<SolverConfig>,
    pub replications: usize,
    pub seed: u64,
}

impl Experiment {
    /// Parses and checks every key, reporting all problems at once.
    pub fn from_raw(raw: &RawConfig) -> Result<Self, CliError> {
        let mut r = Reader { raw, errors: Vec::new() };
        for (key, _) in raw.entries() {
            let known = match key.split_once('.') {
                Some((alg, k)) => alg.parse::<Algorithm>().is_ok() && SOLVER_KEYS.contains(&k),
                None => EXPERIMENT_KEYS.contains(&key) || SOLVER_KEYS.contains(&key),
            };
            if !known {
                r.errors.push(format!("unknown key `{key}`"));
            }
        }

        let preset: Preset = r.get("preset", Preset::SyntheticLsq);
        let (loss0, penalty0) = match preset {
            Preset::SyntheticLsq => (LossChoice::LeastSquares, Penalty::LargestK),
            Preset::HuberScad => (LossChoice::Huber, Penalty::Scad),
            Preset::LogisticLargestK => (LossChoice::Logistic, Penalty::LargestK),
        };
        let seed: u64 = r.get("seed", 0);
        let source = match raw.get("data") {
            Some(p) => {
                let path = raw.resolve_path(p);
                if !path.is_file() {
                    r.errors.push(format!("dataset {} does not exist", path.display()));
                }
                for key in ["n", "d", "s_true", "rho_corr", "noise_sigma", "data_seed"] {
                    if raw.get(key).is_some() {
                        r.errors.push(format!("`{key}` only applies to synthetic data, but `data` is set"));
                    }
                }
                DataSource::File(path)
            }
            None => {
                let d: usize = r.get("d", 1000);
                let mut spec = SyntheticSpec::new(r.get("n", 200), d, r.get("s_true", (d / 20).max(1)));
                spec.rho_corr = r.get("rho_corr", spec.rho_corr);
                spec.noise_sigma = r.get("noise_sigma", spec.noise_sigma);
                spec.seed = r.get("data_seed", seed);
                if let Err(e) = spec.validate() {
                    r.errors.push(e.to_string());
                }
                DataSource::Synthetic(spec)
            }
        };
        let default_k = match &source {
            DataSource::Synthetic(spec) => spec.s_true,
            DataSource::File(_) => 10,
        };

        let positive_labels = raw.get("positive_labels").map(|s| r.list::<f64>("positive_labels", s));
        let rescale = raw.get("rescale").and_then(|s| {
            let v = r.list::<f64>("rescale", s);
            match v[..] {
                [lo, hi] if lo < hi => Some((lo, hi)),
                _ => {
                    r.errors.push(format!("rescale expects `lo, hi` with lo < hi, got {s:?}"));
                    None
                }
            }
        });
        let loss = r.get("loss", loss0);
        let penalty = r.get("penalty", penalty0);
        let rho: f64 = r.get("rho", 100.0);
        let lambda: f64 = r.get("lambda", 1.0);
        let theta: f64 = r.get("theta", 3.0);
        let k = r.get("k", default_k);
        let delta: f64 = r.get("delta", 1e-2);
        let ridge: f64 = r.get("ridge", 0.0);
        let m = raw.get("m").map(|_| r.get("m", 1usize));
        if !(rho >= 0.0 && rho.is_finite()) {
            r.errors.push(format!("rho must be nonnegative, got {rho}"));
        }
        if m == Some(0) {
            r.errors.push("block count m must be at least 1".to_string());
        }
        if let (DataSource::Synthetic(spec), Some(m)) = (&source, m) {
            if m > spec.d {
                r.errors.push(format!("block count m = {m} exceeds the dimension d = {}", spec.d));
            }
        }

        let algorithms = match raw.get("algorithms") {
            Some(s) => r.list::<Algorithm>("algorithms", s),
            None => vec![Algorithm::Rcsd, Algorithm::Rpcd, Algorithm::Acpdc, Algorithm::Pdca],
        };
        if algorithms.is_empty() {
            r.errors.push("no algorithms listed".to_string());
        }
        let mut seen = Vec::new();
        for a in &algorithms {
            if seen.contains(a) {
                r.errors.push(format!("algorithm {a} listed twice"));
            }
            seen.push(*a);
        }
        let solvers = algorithms.iter().map(|&a| r.solver_config(a)).collect();
        let replications = r.get("replications", 10usize);
        if replications == 0 {
            r.errors.push("replications must be at least 1".to_string());
        }

        if !r.errors.is_empty() {
            return Err(CliError::Config(r.errors));
        }
        Ok(Experiment {
            preset,
            source,
            positive_labels,
            rescale,
            loss,
            penalty,
            rho,
            lambda,
            theta,
            k,
            delta,
            ridge,
            m,
            solvers,
            replications,
            seed,
        })
    }

    /// Seed of replication `r`.
    pub fn run_seed(&self, r: usize) -> u64 {
        self.seed.wrapping_add(r as u64)
    }

    pub fn solver(&self, alg: Algorithm) -> Option<&SolverConfig> {
        self.solvers.iter().find(|c| c.algorithm == alg)
    }
}

struct Reader<'a> {
    raw: &'a RawConfig,
    errors: Vec<String>,
}

impl Reader<'_> {
    fn parse_value<T: FromStr>(&mut self, key: &str, s: &str) -> Option<T>
    where
        T::Err: Display,
    {
        match s.parse() {
            Ok(v) => Some(v),
            Err(e) => {
                self.errors.push(format!("`{key}`: cannot parse {s:?}: {e}"));
                None
            }
        }
    }

    fn get<T: FromStr>(&mut self, key: &str, default: T) -> T
    where
        T::Err: Display,
    {
        match self.raw.get(key) {
            Some(s) => self.parse_value(key, s).unwrap_or(default),
            None => default,
        }
    }

    fn list<T: FromStr>(&mut self, key: &str, s: &str) -> Vec<T>
    where
        T::Err: Display,
    {
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .filter_map(|t| self.parse_value(key, t))
            .collect()
    }

    /// Builds the config of `alg` from the run defaults, the unprefixed
    /// solver keys, then the keys prefixed with `alg.`.
    fn solver_config(&mut self, alg: Algorithm) -> SolverConfig {
        let mut c = SolverConfig::new(alg);
        // the pass budget is the comparable stopping rule across methods
        c.max_iters = 1_000_000_000;
        c.max_passes = Some(50.0);
        c.mu = 0.01;
        let prefixed: Vec<String> = SOLVER_KEYS.iter().map(|k| format!("{}.{k}", alg.name())).collect();
        for key in SOLVER_KEYS.iter().copied().chain(prefixed.iter().map(String::as_str)) {
            let Some(value) = self.raw.get(key) else { continue };
            let field = key.rsplit('.').next().unwrap_or(key);
            self.apply(&mut c, key, field, value);
        }
        for v in c.violations() {
            self.errors.push(format!("{alg}: {v}"));
        }
        c
    }

    fn apply(&mut self, c: &mut SolverConfig, key: &str, field: &str, value: &str) {
        fn opt<T: FromStr>(s: &str) -> Result<Option<T>, T::Err> {
            if s == "none" {
                Ok(None)
            } else {
                s.parse().map(Some)
            }
        }
        macro_rules! set {
            ($target:expr, $parse:expr) => {
                match $parse {
                    Ok(v) => $target = v,
                    Err(e) => self.errors.push(format!("`{key}`: cannot parse {value:?}: {e}")),
                }
            };
        }
        match field {
            "max_iters" => set!(c.max_iters, value.parse::<usize>()),
            "max_passes" => set!(c.max_passes, opt::<f64>(value)),
            "inner_iters" => set!(c.inner_iters, value.parse::<InnerIters>()),
            "s" => set!(c.s, value.parse::<f64>()),
            "gamma_scale" => set!(c.gamma_scale, value.parse::<f64>()),
            "mu" => set!(c.mu, value.parse::<f64>()),
            "permutation" => set!(c.permutation, value.parse()),
            "acd_option" => set!(c.acd_option, value.parse()),
            "trace_every" => set!(c.trace_every, value.parse::<f64>()),
            "measure" => set!(c.measure, value.parse()),
            "measure_tol" => set!(c.measure_tol, value.parse::<f64>()),
            "target_measure" => set!(c.target_measure, opt::<f64>(value)),
            "restart_every" => set!(c.restart_every, value.parse::<usize>()),
            "dca_tol" => set!(c.dca_tol, value.parse::<f64>()),
            "dca_floor" => set!(c.dca_floor, value.parse::<f64>()),
            "inner_budget" => set!(c.inner_budget, opt::<usize>(value)),
            "record_wall_time" => set!(c.record_wall_time, value.parse::<bool>()),
            _ => unreachable!("solver key list and match arms differ"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn experiment(text: &str) -> Result<Experiment, CliError> {
        Experiment::from_raw(&RawConfig::parse(text)?)
    }

    fn violations(text: &str) -> Vec<String> {
        match experiment(text) {
            Err(CliError::Config(v)) => v,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn defaults() {
        let e = experiment("").unwrap();
        assert_eq!(e.preset, Preset::SyntheticLsq);
        assert_eq!(e.replications, 10);
        assert_eq!(e.solvers.len(), 4);
        assert_eq!(e.k, 50);
        let DataSource::Synthetic(spec) = &e.source else { panic!() };
        assert_eq!((spec.n, spec.d, spec.rho_corr), (200, 1000, 0.7));
    }

    #[test]
    fn prefixed_keys_override_globals() {
        let e = experiment("algorithms = rcsd, acpdc\nmu = 0.5\nacpdc.mu = 0.02\nacpdc.inner_iters = t0").unwrap();
        assert_eq!(e.solver(Algorithm::Rcsd).unwrap().mu, 0.5);
        let a = e.solver(Algorithm::Acpdc).unwrap();
        assert_eq!((a.mu, a.inner_iters), (0.02, InnerIters::Theory));
    }

    #[test]
    fn collects_every_violation() {
        let v = violations("m = 2000\nd = 100\nalgorithms = rcsd, bogus\ngamma_scale = 0.4\nfoo = 1\nreplications = 0");
        let all = v.join("\n");
        assert!(all.contains("exceeds the dimension"), "{all}");
        assert!(all.contains("unknown algorithm"), "{all}");
        assert!(all.contains("must exceed 1/2"), "{all}");
        assert!(all.contains("unknown key `foo`"), "{all}");
        assert!(all.contains("replications"), "{all}");
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let v = violations("n = 10\nnot a pair\nn = 20");
        assert_eq!(v.len(), 2);
        assert!(v[0].starts_with("line 2") && v[1].starts_with("line 3"));
    }

    #[test]
    fn overrides_replace_file_values() {
        let mut raw = RawConfig::parse("n = 10 # comment\n").unwrap();
        raw.set("n=30").unwrap();
        assert_eq!(raw.get("n"), Some("30"));
        assert!(raw.set("n").is_err());
    }

    #[test]
    fn missing_dataset_is_a_config_error() {
        let v = violations("data = /definitely/not/here.txt");
        assert!(v[0].contains("does not exist"));
    }

    #[test]
    fn optional_values_accept_none() {
        let e = experiment("max_passes = none\nmax_iters = 5\ntarget_measure = 1e-4").unwrap();
        let c = &e.solvers[0];
        assert_eq!((c.max_passes, c.max_iters, c.target_measure), (None, 5, Some(1e-4)));
    }
}
