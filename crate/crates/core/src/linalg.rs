//! Small dense linear algebra: row-major matrices, induced operator norms and
//! a pivoted linear solve. Dimensions here never exceed a handful.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Dense row-major matrix with a declared shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        let m = Self { rows, cols, data };
        m.validate()?;
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            check_dim(cols, row.len())?;
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, 1.0)
    }

    pub fn scalar(n: usize, s: f64) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = s;
        }
        m
    }

    /// `scale * R(angle)`, the planar rotation-scale matrix.
    pub fn rotation_scale(scale: f64, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self { rows: 2, cols: 2, data: vec![scale * c, -scale * s, scale * s, scale * c] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidInput("matrix shape must be positive".into()));
        }
        if self.data.len() != self.rows * self.cols {
            return Err(Error::InvalidInput(format!(
                "matrix declares shape {}x{} but holds {} entries",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        Ok(())
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn transpose_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, xi) in x.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        out
    }

    /// `diag(left) * self * diag(right)`.
    pub fn diag_scaled(&self, left: &[f64], right: &[f64]) -> Self {
        let mut m = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.data[i * self.cols + j] *= left[i] * right[j];
            }
        }
        m
    }

    /// Induced ℓ1 norm: largest absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Induced ℓ∞ norm: largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|a| a.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest singular value by power iteration on `AᵀA`.
    pub fn spectral_norm(&self) -> f64 {
        spectral_norm_power(self, 1e-12, 100_000)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn euclidean(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// `a + t * d`
pub fn axpy(a: &[f64], t: f64, d: &[f64]) -> Vec<f64> {
    a.iter().zip(d).map(|(x, y)| x + t * y).collect()
}

/// Power iteration; stops once the Rayleigh estimate changes by less than
/// `rel_tol` relative to itself.
fn spectral_norm_power(a: &Matrix, rel_tol: f64, max_iter: usize) -> f64 {
    if a.data.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    // Irregular start vector so it is not orthogonal to the dominant direction
    // for structured matrices.
    let mut v: Vec<f64> = (0..a.cols)
        .map(|i| 1.0 + ((i as f64 + 1.0) * std::f64::consts::SQRT_2).fract())
        .collect();
    let nv = euclidean(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let mut sigma = euclidean(&a.mul_vec(&v));
    let mut stable = 0;
    for _ in 0..max_iter {
        let w = a.transpose_mul_vec(&a.mul_vec(&v));
        let nw = euclidean(&w);
        if nw == 0.0 {
            return 0.0;
        }
        v = w.into_iter().map(|x| x / nw).collect();
        let next = euclidean(&a.mul_vec(&v));
        let change = (next - sigma).abs();
        sigma = next;
        if change <= rel_tol * sigma {
            stable += 1;
            if stable >= 3 {
                break;
            }
        } else {
            stable = 0;
        }
    }
    sigma
}

/// Outcome of a pivoted solve.
#[derive(Debug, Clone, PartialEq)]
pub enum Solve {
    Solution(Vec<f64>),
    /// The pivot column was numerically zero.
    Singular { column: usize, pivot: f64 },
}

/// Solves `m x = rhs` by Gaussian elimination with partial pivoting.
pub fn solve(m: &Matrix, rhs: &[f64]) -> Result<Solve> {
    if !m.is_square() {
        return Err(Error::InvalidInput("solve needs a square matrix".into()));
    }
    let n = m.rows;
    check_dim(n, rhs.len())?;
    let scale = m.data.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let tiny = n as f64 * f64::EPSILON * scale.max(f64::MIN_POSITIVE);

    let mut a = m.data.clone();
    let mut b = rhs.to_vec();
    for k in 0..n {
        let (piv_row, piv_abs) = (k..n)
            .map(|i| (i, a[i * n + k].abs()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if piv_abs <= tiny {
            return Ok(Solve::Singular { column: k, pivot: piv_abs });
        }
        if piv_row != k {
            for j in 0..n {
                a.swap(k * n + j, piv_row * n + j);
            }
            b.swap(k, piv_row);
        }
        let pivot = a[k * n + k];
        for i in (k + 1)..n {
            let factor = a[i * n + k] / pivot;
            if factor == 0.0 {
                continue;
            }
            a[i * n + k] = 0.0;
            for j in (k + 1)..n {
                a[i * n + j] -= factor * a[k * n + j];
            }
            b[i] -= factor * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let tail: f64 = ((i + 1)..n).map(|j| a[i * n + j] * x[j]).sum();
        x[i] = (b[i] - tail) / a[i * n + i];
    }
    Ok(Solve::Solution(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn induced_norms_closed_form() {
        let m = Matrix::from_rows(&[vec![1.0, -2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(m.norm_one(), 6.0);
        assert_eq!(m.norm_inf(), 7.0);
    }

    #[test]
    fn spectral_norm_of_scalar_and_rotation() {
        assert!((Matrix::scalar(3, 0.25).spectral_norm() - 0.25).abs() < 1e-14);
        let r = Matrix::rotation_scale(0.4, 0.7);
        assert!((r.spectral_norm() - 0.4).abs() < 1e-12);
        assert_eq!(Matrix::zeros(2, 2).spectral_norm(), 0.0);
    }

    #[test]
    fn solve_with_pivoting() {
        // first pivot is zero, forcing a row swap
        let m = Matrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 1.0]]).unwrap();
        match solve(&m, &[3.0, 5.0]).unwrap() {
            Solve::Solution(x) => {
                assert!((x[0] - 1.0).abs() < 1e-15);
                assert!((x[1] - 3.0).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn solve_reports_singular() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(solve(&m, &[1.0, 1.0]).unwrap(), Solve::Singular { .. }));
    }

    #[test]
    fn shape_mismatch_rejected() {
        assert!(Matrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(Matrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }
}
