use crate::error::{Error, Result};

/// Column-compressed sparse data matrix `A` (n rows, d columns).
///
/// Row indices are strictly increasing within each column and every stored
/// value is finite.
#[derive(Clone, Debug, PartialEq)]
pub struct DataMatrix {
    n: usize,
    d: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl DataMatrix {
    /// Builds a matrix from per-column `(row, value)` lists.
    pub fn from_columns(n: usize, columns: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let d = columns.len();
        let mut col_ptr = Vec::with_capacity(d + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for (j, col) in columns.into_iter().enumerate() {
            let mut prev: Option<usize> = None;
            for (r, v) in col {
                if r >= n {
                    return Err(Error::InvalidParameter(format!(
                        "row index {r} out of range in column {j} (n = {n})"
                    )));
                }
                if prev.is_some_and(|p| r <= p) {
                    return Err(Error::InvalidParameter(format!(
                        "row indices not strictly increasing in column {j}"
                    )));
                }
                if !v.is_finite() {
                    return Err(Error::NumericOverflow("data matrix entry"));
                }
                prev = Some(r);
                row_idx.push(r);
                values.push(v);
            }
            col_ptr.push(row_idx.len());
        }
        Ok(Self {
            n,
            d,
            col_ptr,
            row_idx,
            values,
        })
    }

    /// Builds a matrix from `(row, col, value)` triplets. Exact zeros are
    /// kept as structural entries; duplicates are rejected.
    pub fn from_triplets(n: usize, d: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut columns = vec![Vec::new(); d];
        for &(r, c, v) in triplets {
            if c >= d {
                return Err(Error::InvalidParameter(format!(
                    "column index {c} out of range (d = {d})"
                )));
            }
            columns[c].push((r, v));
        }
        for col in &mut columns {
            col.sort_by_key(|&(r, _)| r);
        }
        Self::from_columns(n, columns)
    }

    /// Dense row-major input; every entry is stored.
    pub fn from_dense_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        let mut columns = vec![Vec::with_capacity(n); d];
        for (r, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Shape {
                    expected: d,
                    got: row.len(),
                });
            }
            for (c, &v) in row.iter().enumerate() {
                columns[c].push((r, v));
            }
        }
        Self::from_columns(n, columns)
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.d
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn col_nnz(&self, j: usize) -> usize {
        self.col_ptr[j + 1] - self.col_ptr[j]
    }

    /// Row indices and values of column `j`.
    #[inline]
    pub fn column(&self, j: usize) -> (&[usize], &[f64]) {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[r.clone()], &self.values[r])
    }

    pub fn col_sq_norm(&self, j: usize) -> f64 {
        self.column(j).1.iter().map(|v| v * v).sum()
    }

    /// `out = A x`.
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                self.axpy_col(j, xj, out);
            }
        }
    }

    /// `out += a * A[:, j]`.
    #[inline]
    pub fn axpy_col(&self, j: usize, a: f64, out: &mut [f64]) {
        let (rows, vals) = self.column(j);
        for (&r, &v) in rows.iter().zip(vals) {
            out[r] += a * v;
        }
    }

    /// `A[:, j]^T r`.
    #[inline]
    pub fn col_dot(&self, j: usize, r: &[f64]) -> f64 {
        let (rows, vals) = self.column(j);
        rows.iter().zip(vals).map(|(&i, &v)| v * r[i]).sum()
    }

    /// Row-major view as `(col, value)` lists, used by the text writer.
    pub fn to_rows(&self) -> Vec<Vec<(usize, f64)>> {
        let mut rows = vec![Vec::new(); self.n];
        for j in 0..self.d {
            let (ri, vals) = self.column(j);
            for (&r, &v) in ri.iter().zip(vals) {
                rows[r].push((j, v));
            }
        }
        rows
    }

    /// Largest eigenvalue bound of `A_I^T A_I` for the column range `cols`.
    ///
    /// Single columns are exact. Wider ranges run 20 power iterations from the
    /// all-ones vector and return `1.01 * rayleigh` when the eigen-residual is
    /// below `1e-3 * rayleigh`, capped by the squared Frobenius norm, which is
    /// also the fallback when the iteration has not settled.
    pub fn block_spectral_bound(&self, cols: std::ops::Range<usize>) -> f64 {
        let width = cols.len();
        let frob: f64 = cols.clone().map(|j| self.col_sq_norm(j)).sum();
        if width == 1 || frob == 0.0 {
            return frob;
        }
        let mut v = vec![1.0 / (width as f64).sqrt(); width];
        let mut av = vec![0.0; self.n];
        let mut mv = vec![0.0; width];
        let mut rayleigh = 0.0;
        let mut residual = f64::INFINITY;
        for _ in 0..20 {
            av.iter_mut().for_each(|a| *a = 0.0);
            for (k, j) in cols.clone().enumerate() {
                self.axpy_col(j, v[k], &mut av);
            }
            for (k, j) in cols.clone().enumerate() {
                mv[k] = self.col_dot(j, &av);
            }
            rayleigh = v.iter().zip(&mv).map(|(a, b)| a * b).sum::<f64>();
            residual = v
                .iter()
                .zip(&mv)
                .map(|(a, b)| (b - rayleigh * a).powi(2))
                .sum::<f64>()
                .sqrt();
            let norm = mv.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            v.iter_mut().zip(&mv).for_each(|(a, b)| *a = b / norm);
        }
        if rayleigh > 0.0 && residual <= 1e-3 * rayleigh {
            (1.01 * rayleigh).min(frob)
        } else {
            frob
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_and_products() {
        let a = DataMatrix::from_triplets(2, 3, &[(1, 1, 1.0), (0, 0, 0.5), (0, 2, 2.0)]).unwrap();
        assert_eq!(a.nnz(), 3);
        let mut out = vec![0.0; 2];
        a.mul_vec(&[1.0, 2.0, 3.0], &mut out);
        assert_eq!(out, vec![6.5, 2.0]);
        assert_eq!(a.col_dot(2, &[1.0, 5.0]), 2.0);
        assert_eq!(a.to_rows()[0], vec![(0, 0.5), (2, 2.0)]);
    }

    #[test]
    fn rejects_bad_structure() {
        assert!(DataMatrix::from_columns(2, vec![vec![(1, 1.0), (0, 1.0)]]).is_err());
        assert!(DataMatrix::from_columns(2, vec![vec![(2, 1.0)]]).is_err());
        assert!(DataMatrix::from_columns(2, vec![vec![(0, f64::NAN)]]).is_err());
        assert!(DataMatrix::from_triplets(2, 1, &[(0, 0, 1.0), (0, 0, 2.0)]).is_err());
    }

    #[test]
    fn spectral_bound_upper_bounds_top_eigenvalue() {
        // rank-one block: A_I = u v^T has lambda_max = |u|^2 |v|^2 = frobenius^2.
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|r| (0..3).map(|c| (r as f64 + 1.0) * (c as f64 + 1.0)).collect())
            .collect();
        let a = DataMatrix::from_dense_rows(&rows).unwrap();
        let frob: f64 = (0..3).map(|j| a.col_sq_norm(j)).sum();
        let b = a.block_spectral_bound(0..3);
        assert!(b <= frob * (1.0 + 1e-12));
        assert!(b >= frob * (1.0 - 1e-9));

        // orthogonal columns: lambda_max = max column norm, iteration cannot
        // settle on the tie so the Frobenius fallback is used.
        let id = DataMatrix::from_dense_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let b = id.block_spectral_bound(0..2);
        assert!(b >= 1.0);
    }
}
