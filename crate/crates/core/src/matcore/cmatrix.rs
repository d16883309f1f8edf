use crate::error::{Error, Result};
use crate::scalar::{cx, Real, C};
use crate::tol;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Dense square complex matrix, row-major.
///
/// Carries every operator in the measurement model: observables, density
/// matrices, measurement operators, POVM elements, projectors and their
/// factors.
#[derive(Clone, PartialEq)]
pub struct CMatrix<R: Real> {
    dim: usize,
    data: Vec<C<R>>,
}

impl<R: Real> CMatrix<R> {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be at least 1");
        Self {
            dim,
            data: vec![C::new(R::zero(), R::zero()); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = cx(R::one());
        }
        m
    }

    /// Builds from row-major entries; panics unless `entries.len() == dim²`.
    pub fn from_vec(dim: usize, entries: Vec<C<R>>) -> Self {
        assert_eq!(entries.len(), dim * dim, "entry count must equal dim²");
        Self { dim, data: entries }
    }

    pub fn from_rows(rows: &[Vec<C<R>>]) -> Self {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "rows must be square");
        Self {
            dim,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    /// Real row-major entries, zero imaginary part.
    pub fn from_real(dim: usize, entries: &[R]) -> Self {
        assert_eq!(entries.len(), dim * dim);
        Self {
            dim,
            data: entries.iter().map(|&x| cx(x)).collect(),
        }
    }

    /// Convenience for tests and fixtures: real entries given as `f64`.
    pub fn from_real_f64(dim: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), dim * dim);
        Self {
            dim,
            data: entries.iter().map(|&x| cx(R::of(x))).collect(),
        }
    }

    pub fn diag(entries: &[C<R>]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    pub fn diag_real(entries: &[R]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = cx(e);
        }
        m
    }

    /// Outer product v·w† of two vectors of equal length.
    pub fn outer(v: &[C<R>], w: &[C<R>]) -> Self {
        assert_eq!(v.len(), w.len());
        let dim = v.len();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = v[i] * w[j].conj();
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C<R>] {
        &self.data
    }

    pub fn mul_mat(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in mul");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re.is_zero() && a.im.is_zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[C<R>]) -> Vec<C<R>> {
        assert_eq!(v.len(), self.dim);
        let n = self.dim;
        (0..n)
            .map(|i| (0..n).map(|j| self.data[i * n + j] * v[j]).sum())
            .collect()
    }

    pub fn scale(&self, s: C<R>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn scale_re(&self, s: R) -> Self {
        self.scale(cx(s))
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j];
            }
        }
        out
    }

    pub fn trace(&self) -> C<R> {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn fro_norm(&self) -> R {
        self.data
            .iter()
            .map(|x| x.norm_sqr())
            .fold(R::zero(), |a, b| a + b)
            .sqrt()
    }

    pub fn max_abs(&self) -> R {
        self.data
            .iter()
            .map(|x| x.norm())
            .fold(R::zero(), |a, b| a.max(b))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }

    /// ‖m − m†‖F.
    pub fn hermitian_defect(&self) -> R {
        (self - &self.adjoint()).fro_norm()
    }

    /// Checks Hermiticity against the default relative tolerance.
    pub fn check_hermitian(&self) -> Result<()> {
        let defect = self.hermitian_defect();
        let scale = self.fro_norm().max(R::one());
        let tol = tol::hermiticity::<R>() * scale;
        if defect > tol {
            return Err(Error::NotHermitian {
                defect: defect.to_f64().unwrap_or(f64::NAN),
                tol: tol.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(())
    }

    pub fn approx_eq(&self, other: &Self, tol: R) -> bool {
        self.dim == other.dim && (self - other).fro_norm() <= tol
    }

    /// Hermitian part (m + m†)/2.
    pub fn hermitian_part(&self) -> Self {
        (self + &self.adjoint()).scale_re(R::of(0.5))
    }

    /// Real part of tr(self · other).
    pub fn trace_product_re(&self, other: &Self) -> R {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut acc = R::zero();
        for i in 0..n {
            for k in 0..n {
                let p = self.data[i * n + k] * other.data[k * n + i];
                acc += p.re;
            }
        }
        acc
    }

    /// tr(self · other).
    pub fn trace_product(&self, other: &Self) -> C<R> {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut acc = C::new(R::zero(), R::zero());
        for i in 0..n {
            for k in 0..n {
                acc += self.data[i * n + k] * other.data[k * n + i];
            }
        }
        acc
    }
}

/// ab − ba.
pub fn commutator<R: Real>(a: &CMatrix<R>, b: &CMatrix<R>) -> Result<CMatrix<R>> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch {
            left: format!("{}×{}", a.dim(), a.dim()),
            right: format!("{}×{}", b.dim(), b.dim()),
        });
    }
    Ok(&a.mul_mat(b) - &b.mul_mat(a))
}

/// ab + ba.
pub fn anticommutator<R: Real>(a: &CMatrix<R>, b: &CMatrix<R>) -> Result<CMatrix<R>> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch {
            left: format!("{}×{}", a.dim(), a.dim()),
            right: format!("{}×{}", b.dim(), b.dim()),
        });
    }
    Ok(&a.mul_mat(b) + &b.mul_mat(a))
}

impl<R: Real> std::ops::Index<(usize, usize)> for CMatrix<R> {
    type Output = C<R>;
    fn index(&self, (i, j): (usize, usize)) -> &C<R> {
        &self.data[i * self.dim + j]
    }
}

impl<R: Real> std::ops::IndexMut<(usize, usize)> for CMatrix<R> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<R> {
        &mut self.data[i * self.dim + j]
    }
}

impl<R: Real> Add for &CMatrix<R> {
    type Output = CMatrix<R>;
    fn add(self, rhs: Self) -> CMatrix<R> {
        assert_eq!(self.dim, rhs.dim);
        CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }
}

impl<R: Real> Sub for &CMatrix<R> {
    type Output = CMatrix<R>;
    fn sub(self, rhs: Self) -> CMatrix<R> {
        assert_eq!(self.dim, rhs.dim);
        CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }
}

impl<R: Real> Mul for &CMatrix<R> {
    type Output = CMatrix<R>;
    fn mul(self, rhs: Self) -> CMatrix<R> {
        self.mul_mat(rhs)
    }
}

impl<R: Real> Neg for &CMatrix<R> {
    type Output = CMatrix<R>;
    fn neg(self) -> CMatrix<R> {
        CMatrix {
            dim: self.dim,
            data: self.data.iter().map(|&a| -a).collect(),
        }
    }
}

impl<R: Real> fmt::Debug for CMatrix<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}×{} [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}
