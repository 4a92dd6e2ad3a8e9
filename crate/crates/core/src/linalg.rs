//! Small dense/sparse helpers shared by the oracle and the learners.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Row-stochastic matrix stored in compressed sparse row form.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    n: usize,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl MarkovChain {
    /// Builds a chain from per-row `(column, probability)` lists. Duplicate
    /// columns within a row are summed; zero entries are dropped.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let n = rows.len();
        let mut row_start = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_start.push(0);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|&(j, _)| j);
            let mut sum = 0.0;
            let mut k = 0;
            while k < row.len() {
                let (j, mut p) = row[k];
                if j >= n {
                    return Err(Error::validation(
                        format!("chain row {i}"),
                        format!("column {j} out of range for {n} states"),
                    ));
                }
                k += 1;
                while k < row.len() && row[k].0 == j {
                    p += row[k].1;
                    k += 1;
                }
                if !(p >= 0.0) {
                    return Err(Error::validation(
                        format!("chain row {i}"),
                        format!("negative or NaN probability {p} at column {j}"),
                    ));
                }
                if p > 0.0 {
                    cols.push(j);
                    vals.push(p);
                    sum += p;
                }
            }
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::validation(
                    format!("chain row {i}"),
                    format!("sums to {sum:.17}, expected 1"),
                ));
            }
            row_start.push(cols.len());
        }
        Ok(Self {
            n,
            row_start,
            cols,
            vals,
        })
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::validation("chain", "matrix must be square"));
        }
        let rows = (0..m.nrows())
            .map(|i| {
                (0..m.ncols())
                    .filter(|&j| m[(i, j)] != 0.0)
                    .map(|j| (j, m[(i, j)]))
                    .collect()
            })
            .collect();
        Self::from_rows(rows)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_start[i]..self.row_start[i + 1];
        self.cols[r.clone()]
            .iter()
            .copied()
            .zip(self.vals[r].iter().copied())
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, p) in self.row(i) {
                m[(i, j)] += p;
            }
        }
        m
    }

    /// Row vector times matrix: `out = x P`.
    pub fn left_mul(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (j, p) in self.row(i) {
                out[j] += xi * p;
            }
        }
    }

    /// Matrix times column vector: `out = P f`.
    pub fn right_mul(&self, f: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).map(|(j, p)| p * f[j]).sum();
        }
    }

    pub fn max_row_sum_error(&self) -> f64 {
        (0..self.n)
            .map(|i| (self.row(i).map(|(_, p)| p).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn sup_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `sqrt(sum_i w_i f_i^2)`.
pub fn weighted_l2(f: &[f64], weights: &[f64]) -> f64 {
    f.iter()
        .zip(weights)
        .map(|(x, w)| w * x * x)
        .sum::<f64>()
        .sqrt()
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_sym_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

pub fn to_dvector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

/// Checks that `p` is a probability vector up to `tol`.
pub fn check_distribution(path: &str, p: &[f64], tol: f64) -> Result<()> {
    if p.is_empty() {
        return Err(Error::validation(path, "empty distribution"));
    }
    if let Some((i, v)) = p
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v >= 0.0 && **v <= 1.0))
    {
        return Err(Error::validation(
            path,
            format!("entry {i} = {v} outside [0, 1]"),
        ));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > tol {
        return Err(Error::validation(
            path,
            format!("sums to {s:.17}, expected 1"),
        ));
    }
    Ok(())
}
