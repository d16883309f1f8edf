use crate::error::{Error, Result};
use crate::scalar::Real;
use std::fmt;
use std::ops::{Add, Mul, Sub};

/// Dense real rectangular matrix, row-major. Used for calibration matrices
/// and least-squares design matrices.
#[derive(Clone, PartialEq)]
pub struct RMatrix<R: Real> {
    rows: usize,
    cols: usize,
    data: Vec<R>,
}

impl<R: Real> RMatrix<R> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1);
        Self {
            rows,
            cols,
            data: vec![R::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = R::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<R>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<R>]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        assert!(rows.iter().all(|row| row.len() == c));
        Self {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn from_f64(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self {
            rows,
            cols,
            data: data.iter().map(|&x| R::of(x)).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[R] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn mul_mat(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch in mul");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[R]) -> Vec<R> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn fro_norm(&self) -> R {
        self.data
            .iter()
            .map(|&x| x * x)
            .fold(R::zero(), |a, b| a + b)
            .sqrt()
    }

    pub fn max_abs(&self) -> R {
        self.data
            .iter()
            .map(|x| x.abs())
            .fold(R::zero(), |a, b| a.max(b))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn col(&self, j: usize) -> Vec<R> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn row(&self, i: usize) -> &[R] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Drops the listed columns, preserving order of the rest.
    pub fn without_cols(&self, drop: &[usize]) -> Self {
        let keep: Vec<usize> = (0..self.cols).filter(|j| !drop.contains(j)).collect();
        let mut out = Self::zeros(self.rows, keep.len().max(1));
        for i in 0..self.rows {
            for (jj, &j) in keep.iter().enumerate() {
                out[(i, jj)] = self[(i, j)];
            }
        }
        out
    }

    /// Determinant by LU with partial pivoting; square only.
    pub fn det(&self) -> Result<R> {
        if self.rows != self.cols {
            return Err(Error::DimMismatch {
                left: format!("{}×{}", self.rows, self.cols),
                right: "square".into(),
            });
        }
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = R::one();
        for k in 0..n {
            let mut piv = k;
            let mut best = a[k * n + k].abs();
            for i in k + 1..n {
                let v = a[i * n + k].abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best.is_zero() {
                return Ok(R::zero());
            }
            if piv != k {
                for j in 0..n {
                    a.swap(k * n + j, piv * n + j);
                }
                det = -det;
            }
            det *= a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / a[k * n + k];
                for j in k..n {
                    let sub = f * a[k * n + j];
                    a[i * n + j] -= sub;
                }
            }
        }
        Ok(det)
    }

    /// Solves the square system `self · x = b` by LU with partial pivoting.
    pub fn lu_solve(&self, b: &[R]) -> Result<Vec<R>> {
        if self.rows != self.cols {
            return Err(Error::DimMismatch {
                left: format!("{}×{}", self.rows, self.cols),
                right: "square".into(),
            });
        }
        assert_eq!(b.len(), self.rows);
        let n = self.rows;
        let mut a = self.data.clone();
        let mut x: Vec<R> = b.to_vec();
        let scale = self.max_abs().max(R::one());
        let pivot_tol = R::of(n as f64) * R::epsilon() * scale;
        for k in 0..n {
            let mut piv = k;
            let mut best = a[k * n + k].abs();
            for i in k + 1..n {
                let v = a[i * n + k].abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best <= pivot_tol {
                return Err(Error::Singular {
                    context: format!("pivot {best:e} at column {k} during LU solve"),
                });
            }
            if piv != k {
                for j in 0..n {
                    a.swap(k * n + j, piv * n + j);
                }
                x.swap(k, piv);
            }
            for i in k + 1..n {
                let f = a[i * n + k] / a[k * n + k];
                for j in k..n {
                    let sub = f * a[k * n + j];
                    a[i * n + j] -= sub;
                }
                let sub = f * x[k];
                x[i] -= sub;
            }
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= a[i * n + j] * x[j];
            }
            x[i] = acc / a[i * n + i];
        }
        Ok(x)
    }
}

impl<R: Real> std::ops::Index<(usize, usize)> for RMatrix<R> {
    type Output = R;
    fn index(&self, (i, j): (usize, usize)) -> &R {
        &self.data[i * self.cols + j]
    }
}

impl<R: Real> std::ops::IndexMut<(usize, usize)> for RMatrix<R> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut R {
        &mut self.data[i * self.cols + j]
    }
}

impl<R: Real> Add for &RMatrix<R> {
    type Output = RMatrix<R>;
    fn add(self, rhs: Self) -> RMatrix<R> {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols);
        RMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }
}

impl<R: Real> Sub for &RMatrix<R> {
    type Output = RMatrix<R>;
    fn sub(self, rhs: Self) -> RMatrix<R> {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols);
        RMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }
}

impl<R: Real> Mul for &RMatrix<R> {
    type Output = RMatrix<R>;
    fn mul(self, rhs: Self) -> RMatrix<R> {
        self.mul_mat(rhs)
    }
}

impl<R: Real> fmt::Debug for RMatrix<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RMatrix {}×{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                write!(f, "{:+.6}  ", self[(i, j)])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}
