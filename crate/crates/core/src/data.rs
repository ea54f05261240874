//! Datasets: synthetic equicorrelated Gaussian designs, the sparse
//! `label idx:val ...` text format, and label/target transforms.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::index;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::oracles::DataMatrix;
use crate::rng;

/// Parameters of a synthetic regression instance.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    /// Number of ones in the planted binary solution.
    pub s_true: usize,
    /// Correlation between any two features.
    pub rho_corr: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(n: usize, d: usize, s_true: usize) -> Self {
        Self {
            n,
            d,
            s_true,
            rho_corr: 0.7,
            noise_sigma: 0.1,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::InvalidParameter("synthetic data needs n, d >= 1".into()));
        }
        if self.s_true == 0 || self.s_true > self.d {
            return Err(Error::InvalidParameter(format!(
                "s_true must lie in [1, d = {}], got {}",
                self.d, self.s_true
            )));
        }
        if !(self.rho_corr.abs() < 1.0) {
            return Err(Error::InvalidParameter(format!("|rho_corr| must be < 1, got {}", self.rho_corr)));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise_sigma must be >= 0, got {}", self.noise_sigma)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Synthetic {
    pub matrix: DataMatrix,
    pub targets: Vec<f64>,
    pub x_true: Vec<f64>,
}

/// Rows `a_r = sqrt(1 - rho) z_r + sqrt(rho) w_r 1` with standard normal
/// `z_r`, `w_r`, which have unit variances and pairwise correlation `rho`.
/// Targets are `A x_true + sigma e`.
///
/// Negative `rho` uses the same construction with the common factor
/// entering with alternating sign, keeping unit variances.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<Synthetic> {
    spec.validate()?;
    let mut rng = rng::stream(spec.seed, rng::STREAM_DATA);
    let (n, d) = (spec.n, spec.d);
    let a = (1.0 - spec.rho_corr.abs()).sqrt();
    let b = spec.rho_corr.abs().sqrt();
    let alternate = spec.rho_corr < 0.0;

    let mut x_true = vec![0.0; d];
    for j in index::sample(&mut rng, d, spec.s_true) {
        x_true[j] = 1.0;
    }
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::with_capacity(n); d];
    let mut targets = Vec::with_capacity(n);
    for r in 0..n {
        let w: f64 = StandardNormal.sample(&mut rng);
        let mut dot = 0.0;
        for (j, col) in columns.iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(&mut rng);
            let sign = if alternate && j % 2 == 1 { -1.0 } else { 1.0 };
            let v = a * z + sign * b * w;
            dot += v * x_true[j];
            col.push((r, v));
        }
        let e: f64 = StandardNormal.sample(&mut rng);
        targets.push(dot + spec.noise_sigma * e);
    }
    Ok(Synthetic {
        matrix: DataMatrix::from_columns(n, columns)?,
        targets,
        x_true,
    })
}

/// `+1` where the target is positive, `-1` elsewhere.
pub fn sign_labels(targets: &[f64]) -> Vec<f64> {
    targets.iter().map(|&t| if t > 0.0 { 1.0 } else { -1.0 }).collect()
}

/// A parsed sparse dataset.
#[derive(Clone, Debug)]
pub struct SparseDataset {
    pub matrix: DataMatrix,
    /// Labels or targets as written in the file.
    pub labels: Vec<f64>,
}

pub fn read_sparse_dataset(path: impl AsRef<Path>) -> Result<SparseDataset> {
    let path = path.as_ref();
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(io)?;
    parse_sparse(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => io(source),
        other => other,
    })
}

/// Parses `label idx:val idx:val ...` lines with 1-based, strictly
/// increasing indices. Blank lines and `#` comments are skipped; the
/// number of columns is the largest index seen.
pub fn parse_sparse<R: Read>(reader: BufReader<R>) -> Result<SparseDataset> {
    let mut triplets = Vec::new();
    let mut labels = Vec::new();
    let mut d = 0;
    for (lineno, line) in reader.lines().enumerate() {
        let line_no = lineno + 1;
        let line = line.map_err(|source| Error::Io {
            path: "<input>".into(),
            source,
        })?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut fields = content.split_ascii_whitespace();
        let label_str = fields.next().unwrap_or_default();
        let label: f64 = label_str.parse().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("bad label {label_str:?}"),
        })?;
        if !label.is_finite() {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("non-finite label {label_str:?}"),
            });
        }
        let row = labels.len();
        let mut prev = 0usize;
        for field in fields {
            let (idx, val) = field.split_once(':').ok_or_else(|| Error::Parse {
                line: line_no,
                msg: format!("expected idx:val, got {field:?}"),
            })?;
            let idx: usize = idx.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("bad index {idx:?}"),
            })?;
            let val: f64 = val.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("bad value {val:?}"),
            })?;
            if !val.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("non-finite value at index {idx}"),
                });
            }
            if idx == 0 {
                return Err(Error::Format {
                    line: line_no,
                    msg: "indices are 1-based; found 0".into(),
                });
            }
            if idx <= prev {
                return Err(Error::Format {
                    line: line_no,
                    msg: format!("index {idx} does not increase past {prev}"),
                });
            }
            prev = idx;
            d = d.max(idx);
            triplets.push((row, idx - 1, val));
        }
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(SparseDataset {
        matrix: DataMatrix::from_triplets(labels.len(), d, &triplets)?,
        labels,
    })
}

/// Writes the dataset in the sparse text format. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_sparse_dataset(path: impl AsRef<Path>, matrix: &DataMatrix, labels: &[f64]) -> Result<()> {
    let path = path.as_ref();
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    crate::error::check_len(matrix.nrows(), labels.len())?;
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    for (label, row) in labels.iter().zip(matrix.to_rows()) {
        let mut line = format!("{label}");
        for (j, v) in row {
            line.push_str(&format!(" {}:{}", j + 1, v));
        }
        line.push('\n');
        out.write_all(line.as_bytes()).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// `+1` for labels in `positive`, `-1` otherwise.
pub fn binarize_labels(labels: &[f64], positive: &[f64]) -> Vec<f64> {
    labels
        .iter()
        .map(|l| if positive.contains(l) { 1.0 } else { -1.0 })
        .collect()
}

/// Maps `{0, 1}` labels to `{-1, +1}`; other label sets are returned as is.
pub fn normalize_binary_labels(labels: &[f64]) -> Vec<f64> {
    if labels.iter().all(|&l| l == 0.0 || l == 1.0) {
        labels.iter().map(|&l| 2.0 * l - 1.0).collect()
    } else {
        labels.to_vec()
    }
}

/// Affine map of `[min, max]` onto `[lo, hi]`; constant input maps to the
/// midpoint.
pub fn rescale_targets(targets: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let min = targets.iter().copied().fold(f64::INFINITY, f64::min);
    let max = targets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > min) {
        return vec![0.5 * (lo + hi); targets.len()];
    }
    let scale = (hi - lo) / (max - min);
    targets.iter().map(|&t| lo + (t - min) * scale).collect()
}
