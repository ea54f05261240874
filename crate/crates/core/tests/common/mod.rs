#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use ncd_opt::data::{gen_synthetic, SyntheticSpec};
use ncd_opt::oracles::{DataMatrix, LossKind, SmoothOracle};
use ncd_opt::regularizers::{ConcaveH, SeparablePhi};
use ncd_opt::CompositeProblem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Huber regression with a SCAD penalty of weight `rho/d` on the
/// equicorrelated synthetic design.
pub fn huber_scad(n: usize, d: usize, m: usize, delta: f64, seed: u64) -> CompositeProblem {
    let mut spec = SyntheticSpec::new(n, d, (d / 20).max(1));
    spec.seed = seed;
    let syn = gen_synthetic(&spec).unwrap();
    let oracle = SmoothOracle::new(LossKind::huber(delta).unwrap(), Arc::new(syn.matrix), syn.targets).unwrap();
    let w = 100.0 / d as f64;
    let phi = SeparablePhi::l1(1.0).unwrap().scaled(w).unwrap();
    let h = ConcaveH::scad(1.0, 3.0).unwrap().scaled(w).unwrap();
    CompositeProblem::new(oracle, phi, h, m).unwrap()
}

/// Least squares on the synthetic design with `l1 - largest_k`.
pub fn lsq_largest_k(n: usize, d: usize, m: usize, k: usize, lambda: f64, seed: u64) -> CompositeProblem {
    let mut spec = SyntheticSpec::new(n, d, k);
    spec.seed = seed;
    let syn = gen_synthetic(&spec).unwrap();
    let oracle = SmoothOracle::new(LossKind::LeastSquares, Arc::new(syn.matrix), syn.targets).unwrap();
    let phi = SeparablePhi::l1(lambda).unwrap();
    let h = ConcaveH::largest_k(lambda, k).unwrap();
    CompositeProblem::new(oracle, phi, h, m).unwrap()
}

/// Dense Gaussian least squares with optional ridge.
pub fn gaussian_lsq(n: usize, d: usize, m: usize, ridge: f64, seed: u64, phi: SeparablePhi, h: ConcaveH) -> CompositeProblem {
    let mut r = rng(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| r.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    let b: Vec<f64> = (0..n).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
    let a = DataMatrix::from_dense_rows(&rows).unwrap();
    let oracle = SmoothOracle::new(LossKind::LeastSquares, Arc::new(a), b).unwrap().with_ridge(ridge);
    CompositeProblem::new(oracle, phi, h, m).unwrap()
}

/// Quadratic `f(x) = 1/(2n) ||A x - b||^2 - (mu/2) ||x||^2` whose Hessian
/// `A^T A / n` has the given spectrum in a random orthonormal basis.
pub struct DesignedQuadratic {
    pub problem: CompositeProblem,
    pub x_star: Vec<f64>,
    pub hessian: DMatrix<f64>,
}

pub fn designed_quadratic(spectrum: &[f64], mu: f64, m: usize, seed: u64) -> DesignedQuadratic {
    let d = spectrum.len();
    let mut r = rng(seed);
    let g = DMatrix::from_fn(d, d, |_, _| r.sample::<f64, _>(StandardNormal));
    let v = g.qr().q();
    let n = d as f64;
    // A = diag(sqrt(n lambda)) V^T, so A^T A / n = V diag(lambda) V^T
    let a = DMatrix::from_fn(d, d, |i, j| (n * spectrum[i]).sqrt() * v[(j, i)]);
    let x_plant = DVector::from_fn(d, |_, _| r.sample::<f64, _>(StandardNormal));
    let b = &a * &x_plant;
    let rows: Vec<Vec<f64>> = (0..d).map(|i| a.row(i).iter().copied().collect()).collect();
    let matrix = DataMatrix::from_dense_rows(&rows).unwrap();
    let oracle = SmoothOracle::new(LossKind::LeastSquares, Arc::new(matrix), b.iter().copied().collect())
        .unwrap()
        .with_ridge(-mu);
    let hessian = a.transpose() * &a / n;
    let shifted = &hessian - DMatrix::identity(d, d) * mu;
    let x_star = shifted.clone().lu().solve(&(&hessian * &x_plant)).unwrap();
    let l_max = spectrum.iter().cloned().fold(0.0, f64::max);
    let problem = CompositeProblem::new(oracle, SeparablePhi::zero(), ConcaveH::zero(), m)
        .unwrap()
        .with_global_lipschitz(l_max)
        .unwrap();
    DesignedQuadratic {
        problem,
        x_star: x_star.iter().copied().collect(),
        hessian: shifted,
    }
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
