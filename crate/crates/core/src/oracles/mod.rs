//! Smooth-loss oracles over a column-accessible sparse data matrix.
//!
//! Every loss here is a generalized linear model, so the oracle keeps the
//! product `A x` cached next to the iterate. A block step touches only the
//! block's columns and a block gradient reads only those columns, which
//! makes one coordinate-descent iteration cost `O(nnz_i)`.

mod loss;
mod matrix;
mod smooth;

pub use loss::{huber, log1p_exp, sigmoid, LossKind};
pub use matrix::DataMatrix;
pub use smooth::{CachedPoint, LipschitzReport, SmoothOracle, CACHE_TOLERANCE, LIPSCHITZ_FLOOR};

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::blockspace::BlockPartition;

    fn random_instance(loss: LossKind, n: usize, d: usize, seed: u64) -> SmoothOracle {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..d)
                    .map(|_| if rng.random::<f64>() < 0.6 { rng.random_range(-1.0..1.0) } else { 0.0 })
                    .collect()
            })
            .collect();
        let a = DataMatrix::from_dense_rows(&rows).unwrap();
        let b = (0..n)
            .map(|_| match loss {
                LossKind::Logistic => {
                    if rng.random::<bool>() {
                        1.0
                    } else {
                        -1.0
                    }
                }
                _ => rng.random_range(-1.0..1.0),
            })
            .collect();
        SmoothOracle::new(loss, Arc::new(a), b).unwrap()
    }

    fn central_difference(o: &SmoothOracle, x: &[f64], j: usize) -> f64 {
        let h = 1e-5;
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        (o.value(&xp).unwrap() - o.value(&xm).unwrap()) / (2.0 * h)
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (k, loss) in [LossKind::LeastSquares, LossKind::Logistic, LossKind::Huber { delta: 0.5 }]
            .into_iter()
            .enumerate()
        {
            let o = random_instance(loss, 30, 10, 100 + k as u64);
            let x: Vec<f64> = (0..10).map(|_| rng.random_range(-0.5..0.5)).collect();
            let g = o.full_gradient(&x).unwrap();
            let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            let fd: Vec<f64> = (0..10).map(|j| central_difference(&o, &x, j)).collect();
            let err = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            assert!(err / gnorm <= 1e-6, "{loss:?}: rel err {}", err / gnorm);
        }
    }

    #[test]
    fn logistic_gradient_at_origin() {
        let o = random_instance(LossKind::Logistic, 12, 4, 3);
        let g = o.full_gradient(&[0.0; 4]).unwrap();
        let n = 12.0;
        for (j, gj) in g.iter().enumerate() {
            let expected = -o.matrix().col_dot(j, o.targets()) / (2.0 * n);
            assert!((gj - expected).abs() < 1e-15);
        }
        assert!((o.value(&[0.0; 4]).unwrap() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn least_squares_zero_gradient_at_exact_solution() {
        let a = DataMatrix::from_dense_rows(&[vec![2.0, 0.0], vec![1.0, 1.0], vec![0.0, 3.0]]).unwrap();
        let x = [0.5, -1.0];
        let b = vec![1.0, -0.5, -3.0];
        let o = SmoothOracle::new(LossKind::LeastSquares, Arc::new(a), b).unwrap();
        assert_eq!(o.full_gradient(&x).unwrap(), vec![0.0, 0.0]);
        assert_eq!(o.value(&x).unwrap(), 0.0);
    }

    #[test]
    fn block_gradient_is_slice_of_full_gradient() {
        let o = random_instance(LossKind::Huber { delta: 0.2 }, 25, 9, 11);
        let part = BlockPartition::uniform(9, 4).unwrap();
        let x: Vec<f64> = (0..9).map(|j| 0.1 * j as f64 - 0.3).collect();
        let p = o.point(x).unwrap();
        let full = o.full_gradient_at(&p).unwrap();
        for i in 0..4 {
            assert_eq!(o.block_gradient(&p, &part, i).unwrap(), full[part.range(i)].to_vec());
        }
    }

    #[test]
    fn singleton_least_squares_block_gradient_closed_form() {
        let o = random_instance(LossKind::LeastSquares, 15, 5, 21);
        let part = BlockPartition::uniform(5, 5).unwrap();
        let x = vec![0.3, -0.1, 0.2, 0.0, 1.0];
        let p = o.point(x.clone()).unwrap();
        let mut r = vec![0.0; 15];
        o.matrix().mul_vec(&x, &mut r);
        r.iter_mut().zip(o.targets()).for_each(|(ri, bi)| *ri -= bi);
        for i in 0..5 {
            let expected = o.matrix().col_dot(i, &r) / 15.0;
            assert!((o.block_gradient(&p, &part, i).unwrap()[0] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn block_steps_keep_cache_consistent() {
        let o = random_instance(LossKind::Logistic, 40, 12, 5);
        let part = BlockPartition::uniform(12, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut p = o.zero_point();
        let before = p.clone();
        o.apply_block_step(&mut p, &part, 2, &[0.0, 0.0]).unwrap();
        assert_eq!(p, before);
        for _ in 0..100 {
            let i = rng.random_range(0..5);
            let delta: Vec<f64> = (0..part.block_len(i)).map(|_| rng.random_range(-1.0..1.0)).collect();
            o.apply_block_step(&mut p, &part, i, &delta).unwrap();
        }
        o.verify(&p).unwrap();

        let f0 = o.value_at(&p).unwrap();
        let delta = vec![0.37, -0.21, 0.05];
        o.apply_block_step(&mut p, &part, 0, &delta).unwrap();
        let neg: Vec<f64> = delta.iter().map(|v| -v).collect();
        o.apply_block_step(&mut p, &part, 0, &neg).unwrap();
        assert!((o.value_at(&p).unwrap() - f0).abs() <= 1e-10 * f0.abs().max(1.0));
    }

    #[test]
    fn foreign_point_is_rejected() {
        let o1 = random_instance(LossKind::LeastSquares, 5, 3, 1);
        let o2 = random_instance(LossKind::LeastSquares, 5, 3, 2);
        let part = BlockPartition::uniform(3, 3).unwrap();
        let p = o1.zero_point();
        assert!(matches!(o2.block_gradient(&p, &part, 0), Err(crate::Error::CacheInvalid { .. })));
    }

    #[test]
    fn corrupted_cache_is_detected() {
        let o = random_instance(LossKind::LeastSquares, 8, 3, 4);
        let mut p = o.point(vec![1.0, 2.0, 3.0]).unwrap();
        o.verify(&p).unwrap();
        let mut q = p.clone();
        q.lincomb_assign(1.0, 1e-3, &p);
        // x and Ax scaled consistently: still valid
        o.verify(&q).unwrap();
        o.set_coordinate(&mut p, 0, 5.0);
        o.verify(&p).unwrap();
    }

    #[test]
    fn singleton_lipschitz_constants() {
        let o = random_instance(LossKind::Huber { delta: 0.1 }, 20, 6, 8);
        let part = BlockPartition::uniform(6, 6).unwrap();
        let rep = o.block_lipschitz(&part).unwrap();
        for j in 0..6 {
            let expected = o.matrix().col_sq_norm(j) / (20.0 * 0.1);
            assert!((rep.partition.lipschitz()[j] - expected).abs() <= 1e-15 * expected);
        }
        let o = random_instance(LossKind::Logistic, 20, 6, 8);
        let rep = o.block_lipschitz(&part).unwrap();
        for j in 0..6 {
            let expected = o.matrix().col_sq_norm(j) / (4.0 * 20.0);
            assert!((rep.partition.lipschitz()[j] - expected).abs() <= 1e-15 * expected);
        }
    }

    #[test]
    fn identity_lipschitz_is_one_over_n() {
        let n = 5;
        let rows: Vec<Vec<f64>> = (0..n).map(|r| (0..n).map(|c| f64::from(u8::from(r == c))).collect()).collect();
        let a = DataMatrix::from_dense_rows(&rows).unwrap();
        let o = SmoothOracle::new(LossKind::Huber { delta: 1.0 }, Arc::new(a), vec![0.0; n]).unwrap();
        let rep = o.block_lipschitz(&BlockPartition::uniform(n, n).unwrap()).unwrap();
        assert!(rep.partition.lipschitz().iter().all(|&l| (l - 0.2).abs() < 1e-15));
        assert!(rep.floored.is_empty());
    }

    #[test]
    fn zero_block_is_floored_and_flagged() {
        let a = DataMatrix::from_columns(2, vec![vec![(0, 1.0)], vec![], vec![(1, 2.0)]]).unwrap();
        let o = SmoothOracle::new(LossKind::LeastSquares, Arc::new(a), vec![0.0, 0.0]).unwrap();
        let rep = o.block_lipschitz(&BlockPartition::uniform(3, 3).unwrap()).unwrap();
        assert_eq!(rep.floored, vec![1]);
        assert_eq!(rep.partition.lipschitz()[1], LIPSCHITZ_FLOOR);
    }

    #[test]
    fn logistic_curvature_bound_is_tight_enough() {
        // maximize numeric directional curvature along e_j over random x; the
        // closed-form constant must dominate every sample.
        let o = random_instance(LossKind::Logistic, 20, 4, 12);
        let part = BlockPartition::uniform(4, 4).unwrap();
        let rep = o.block_lipschitz(&part).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..200 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-0.2..0.2)).collect();
            for j in 0..4 {
                let h = 1e-4;
                let mut xp = x.clone();
                xp[j] += h;
                let g0 = o.full_gradient(&x).unwrap()[j];
                let g1 = o.full_gradient(&xp).unwrap()[j];
                assert!((g1 - g0) / h <= rep.partition.lipschitz()[j] * (1.0 + 1e-6));
            }
        }
    }

    #[test]
    fn block_descent_inequality_with_estimated_constants() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for loss in [LossKind::LeastSquares, LossKind::Logistic, LossKind::Huber { delta: 0.05 }] {
            let o = random_instance(loss, 30, 12, 31);
            let part = o.block_lipschitz(&BlockPartition::uniform(12, 4).unwrap()).unwrap().partition;
            for _ in 0..1000 {
                let x: Vec<f64> = (0..12).map(|_| rng.random_range(-2.0..2.0)).collect();
                let i = rng.random_range(0..4);
                let t: Vec<f64> = (0..part.block_len(i)).map(|_| rng.random_range(-1.0..1.0)).collect();
                let p = o.point(x.clone()).unwrap();
                let g = o.block_gradient(&p, &part, i).unwrap();
                let mut q = p.clone();
                o.apply_block_step(&mut q, &part, i, &t).unwrap();
                let lhs = o.value_at(&q).unwrap();
                let lin: f64 = g.iter().zip(&t).map(|(a, b)| a * b).sum();
                let sq: f64 = t.iter().map(|v| v * v).sum();
                let rhs = o.value_at(&p).unwrap() + lin + 0.5 * part.lipschitz()[i] * sq;
                assert!(lhs <= rhs + 1e-10 * rhs.abs().max(1.0), "{loss:?}");
            }
        }
    }

    #[test]
    fn least_squares_gradient_is_affine() {
        let o = random_instance(LossKind::LeastSquares, 10, 4, 2);
        let x = [0.3, 0.1, -0.7, 1.1];
        let y = [-0.2, 0.5, 0.4, 0.0];
        let xy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        let g0 = o.full_gradient(&[0.0; 4]).unwrap();
        let (gx, gy, gxy) = (
            o.full_gradient(&x).unwrap(),
            o.full_gradient(&y).unwrap(),
            o.full_gradient(&xy).unwrap(),
        );
        for j in 0..4 {
            assert!((gxy[j] - (gx[j] + gy[j] - g0[j])).abs() < 1e-13);
        }
    }

    #[test]
    fn no_nan_on_large_iterates() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for loss in [LossKind::LeastSquares, LossKind::Logistic, LossKind::Huber { delta: 1e-3 }] {
            let o = random_instance(loss, 20, 8, 44);
            for _ in 0..50 {
                let mut x: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
                let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                x.iter_mut().for_each(|v| *v *= 1e3 / norm);
                assert!(o.value(&x).unwrap().is_finite());
                assert!(o.full_gradient(&x).unwrap().iter().all(|v| v.is_finite()));
            }
        }
    }

    #[test]
    fn weakly_convex_ridge() {
        let o = random_instance(LossKind::LeastSquares, 10, 3, 5).with_ridge(-0.3);
        let x = [0.2, -0.4, 0.9];
        let g = o.full_gradient(&x).unwrap();
        for j in 0..3 {
            assert!((g[j] - central_difference(&o, &x, j)).abs() < 1e-8);
        }
        let plain = random_instance(LossKind::LeastSquares, 10, 3, 5);
        let part = BlockPartition::uniform(3, 3).unwrap();
        let l0 = plain.block_lipschitz(&part).unwrap().partition;
        let l1 = o.block_lipschitz(&part).unwrap().partition;
        for j in 0..3 {
            assert!((l1.lipschitz()[j] - l0.lipschitz()[j] - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn step_delta_matches_full_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for loss in [LossKind::LeastSquares, LossKind::Logistic, LossKind::Huber { delta: 0.2 }] {
            let o = random_instance(loss, 25, 12, 5).with_ridge(-0.3);
            let part = BlockPartition::uniform(12, 4).unwrap();
            let rows = o.block_rows(&part);
            let mut p = o.point((0..12).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
            let mut scratch = Vec::new();
            for _ in 0..50 {
                let i = rng.random_range(0..4);
                let delta: Vec<f64> = part.range(i).map(|_| rng.random_range(-0.5..0.5)).collect();
                let before = o.value_at(&p).unwrap();
                let d = o.apply_step_with_delta(&mut p, part.range(i), &delta, &rows[i], &mut scratch).unwrap();
                let after = o.value_at(&p).unwrap();
                assert!((after - before - d).abs() <= 1e-12 * (1.0 + before.abs()));
            }
        }
    }
}
