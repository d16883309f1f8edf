//! One-sided Jacobi singular value decomposition for small dense matrices,
//! real and complex, plus the Moore–Penrose pseudoinverse built on it.

use super::cmatrix::CMatrix;
use super::rmatrix::RMatrix;
use crate::scalar::{cx, Real, C};
use crate::tol;

const MAX_SWEEPS: usize = 60;

/// Full SVD of a real N×M matrix: `a = u · diag(sigma) · vᵀ` with `u` N×N
/// orthogonal, `v` M×M orthogonal and `sigma` the min(N, M) singular values
/// in nonincreasing order.
#[derive(Debug, Clone)]
pub struct SvdResult<R: Real> {
    pub u: RMatrix<R>,
    pub sigma: Vec<R>,
    pub v: RMatrix<R>,
}

impl<R: Real> SvdResult<R> {
    pub fn sigma_max(&self) -> R {
        self.sigma.first().copied().unwrap_or(R::zero())
    }

    /// Default absolute threshold below which a singular value counts as zero.
    pub fn default_rank_threshold(&self) -> R {
        tol::rank_threshold(self.u.rows().max(self.v.rows()), self.sigma_max())
    }

    pub fn rank(&self, threshold: R) -> usize {
        self.sigma.iter().filter(|&&s| s > threshold).count()
    }

    /// Reconstructs `u · diag(sigma) · vᵀ`.
    pub fn reconstruct(&self) -> RMatrix<R> {
        let n = self.u.rows();
        let m = self.v.rows();
        let mut us = RMatrix::zeros(n, m);
        for j in 0..self.sigma.len() {
            for i in 0..n {
                us[(i, j)] = self.u[(i, j)] * self.sigma[j];
            }
        }
        us.mul_mat(&self.v.transpose())
    }

    /// Moore–Penrose pseudoinverse `v · sigma⁺ · uᵀ`, zeroing singular values
    /// at or below `threshold`.
    pub fn pinv(&self, threshold: R) -> RMatrix<R> {
        let n = self.u.rows();
        let m = self.v.rows();
        let mut out = RMatrix::zeros(m, n);
        for k in 0..self.sigma.len() {
            if self.sigma[k] <= threshold {
                continue;
            }
            let inv = R::one() / self.sigma[k];
            for i in 0..m {
                let vik = self.v[(i, k)] * inv;
                if vik.is_zero() {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += vik * self.u[(j, k)];
                }
            }
        }
        out
    }

    /// Minimum-norm least-squares solution of `a·x = b`.
    pub fn solve_min_norm(&self, b: &[R], threshold: R) -> Vec<R> {
        assert_eq!(b.len(), self.u.rows());
        let m = self.v.rows();
        let mut x = vec![R::zero(); m];
        for k in 0..self.sigma.len() {
            if self.sigma[k] <= threshold {
                continue;
            }
            let coeff = (0..b.len()).map(|i| self.u[(i, k)] * b[i]).sum::<R>() / self.sigma[k];
            for (i, xi) in x.iter_mut().enumerate() {
                *xi += self.v[(i, k)] * coeff;
            }
        }
        x
    }

    /// Orthonormal basis of the null space: right singular vectors whose
    /// singular value is at or below `threshold`, plus the columns of `v`
    /// beyond min(N, M).
    pub fn null_space(&self, threshold: R) -> Vec<Vec<R>> {
        let m = self.v.rows();
        let mut basis = Vec::new();
        for k in 0..m {
            let sigma = self.sigma.get(k).copied().unwrap_or(R::zero());
            if sigma <= threshold {
                basis.push(self.v.col(k));
            }
        }
        basis
    }
}

/// One-sided Jacobi SVD of a real rectangular matrix.
pub fn svd_real<R: Real>(a: &RMatrix<R>) -> SvdResult<R> {
    if a.rows() >= a.cols() {
        svd_real_tall(a)
    } else {
        let t = svd_real_tall(&a.transpose());
        SvdResult {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        }
    }
}

fn svd_real_tall<R: Real>(a: &RMatrix<R>) -> SvdResult<R> {
    let n = a.rows();
    let m = a.cols();
    let mut w = a.clone();
    let mut v = RMatrix::identity(m);
    let eps = R::epsilon();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..m {
            for q in p + 1..m {
                let mut app = R::zero();
                let mut aqq = R::zero();
                let mut apq = R::zero();
                for i in 0..n {
                    app += w[(i, p)] * w[(i, p)];
                    aqq += w[(i, q)] * w[(i, q)];
                    apq += w[(i, p)] * w[(i, q)];
                }
                if apq.abs() <= eps * (app * aqq).sqrt() || app.is_zero() || aqq.is_zero() {
                    continue;
                }
                rotated = true;
                let tau = (aqq - app) / (R::of(2.0) * apq);
                let t = if tau >= R::zero() {
                    R::one() / (tau + (R::one() + tau * tau).sqrt())
                } else {
                    -R::one() / (-tau + (R::one() + tau * tau).sqrt())
                };
                let c = R::one() / (R::one() + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let wp = w[(i, p)];
                    let wq = w[(i, q)];
                    w[(i, p)] = c * wp - s * wq;
                    w[(i, q)] = s * wp + c * wq;
                }
                for i in 0..m {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigma: Vec<R> = (0..m)
        .map(|j| (0..n).map(|i| w[(i, j)] * w[(i, j)]).sum::<R>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| sigma[b].partial_cmp(&sigma[a]).unwrap());
    let mut ws = RMatrix::zeros(n, m);
    let mut vs = RMatrix::zeros(m, m);
    for (new, &old) in order.iter().enumerate() {
        for i in 0..n {
            ws[(i, new)] = w[(i, old)];
        }
        for i in 0..m {
            vs[(i, new)] = v[(i, old)];
        }
    }
    sigma = order.iter().map(|&k| sigma[k]).collect();

    // Left factor: normalized nonzero columns, completed to an orthonormal
    // basis over the kernel and the codimension.
    let cutoff = tol::rank_threshold(n.max(m), sigma.first().copied().unwrap_or(R::zero()));
    let mut u_cols: Vec<Vec<R>> = Vec::with_capacity(n);
    for j in 0..m {
        if sigma[j] > cutoff {
            u_cols.push((0..n).map(|i| ws[(i, j)] / sigma[j]).collect());
        }
    }
    complete_orthonormal_real(&mut u_cols, n);
    let mut u = RMatrix::zeros(n, n);
    for (j, col) in u_cols.iter().enumerate() {
        for i in 0..n {
            u[(i, j)] = col[i];
        }
    }
    SvdResult { u, sigma, v: vs }
}

/// Extends a set of orthonormal columns to a full basis of dimension `n` by
/// Gram–Schmidt, choosing at each step the standard basis vector with the
/// largest residual outside the current span.
fn complete_orthonormal_real<R: Real>(cols: &mut Vec<Vec<R>>, n: usize) {
    while cols.len() < n {
        let mut best: Option<(R, Vec<R>)> = None;
        for e in 0..n {
            let mut cand = vec![R::zero(); n];
            cand[e] = R::one();
            for c in cols.iter() {
                let dot = (0..n).map(|i| c[i] * cand[i]).sum::<R>();
                for i in 0..n {
                    cand[i] -= dot * c[i];
                }
            }
            let norm = cand.iter().map(|&x| x * x).sum::<R>().sqrt();
            if best.as_ref().is_none_or(|(b, _)| norm > *b) {
                best = Some((norm, cand));
            }
        }
        let (norm, mut cand) = best.unwrap();
        assert!(norm > R::epsilon(), "failed to complete orthonormal basis");
        for x in cand.iter_mut() {
            *x /= norm;
        }
        cols.push(cand);
    }
}

/// Full SVD of a complex square matrix: `m = u · diag(sigma) · v†`.
#[derive(Debug, Clone)]
pub struct ComplexSvd<R: Real> {
    pub u: CMatrix<R>,
    pub sigma: Vec<R>,
    pub v: CMatrix<R>,
}

impl<R: Real> ComplexSvd<R> {
    pub fn reconstruct(&self) -> CMatrix<R> {
        let n = self.u.dim();
        let mut us = CMatrix::zeros(n);
        for j in 0..n {
            for i in 0..n {
                us[(i, j)] = self.u[(i, j)] * cx(self.sigma[j]);
            }
        }
        us.mul_mat(&self.v.adjoint())
    }
}

/// One-sided Jacobi SVD for a square complex matrix.
pub fn svd_complex<R: Real>(a: &CMatrix<R>) -> ComplexSvd<R> {
    let n = a.dim();
    let mut w = a.clone();
    let mut v = CMatrix::identity(n);
    let eps = R::epsilon();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let mut app = R::zero();
                let mut aqq = R::zero();
                let mut apq = C::new(R::zero(), R::zero());
                for i in 0..n {
                    app += w[(i, p)].norm_sqr();
                    aqq += w[(i, q)].norm_sqr();
                    apq += w[(i, p)].conj() * w[(i, q)];
                }
                let habs = apq.norm();
                if habs <= eps * (app * aqq).sqrt() || app.is_zero() || aqq.is_zero() {
                    continue;
                }
                rotated = true;
                // Unitary 2×2 diagonalizing the Gram block [[app, apq], [apq̄, aqq]].
                let wphase = apq / cx(habs);
                let tau = (aqq - app) / (R::of(2.0) * habs);
                let t = if tau >= R::zero() {
                    R::one() / (tau + (R::one() + tau * tau).sqrt())
                } else {
                    -R::one() / (-tau + (R::one() + tau * tau).sqrt())
                };
                let c = R::one() / (R::one() + t * t).sqrt();
                let s = c * t;
                let wc = wphase.conj();
                for i in 0..n {
                    let wp = w[(i, p)];
                    let wq = w[(i, q)];
                    w[(i, p)] = wp * cx(c) - wq * wc * cx(s);
                    w[(i, q)] = wp * cx(s) + wq * wc * cx(c);
                }
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = vp * cx(c) - vq * wc * cx(s);
                    v[(i, q)] = vp * cx(s) + vq * wc * cx(c);
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigma: Vec<R> = (0..n)
        .map(|j| {
            (0..n)
                .map(|i| w[(i, j)].norm_sqr())
                .sum::<R>()
                .sqrt()
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sigma[b].partial_cmp(&sigma[a]).unwrap());
    let mut ws = CMatrix::zeros(n);
    let mut vs = CMatrix::zeros(n);
    for (new, &old) in order.iter().enumerate() {
        for i in 0..n {
            ws[(i, new)] = w[(i, old)];
            vs[(i, new)] = v[(i, old)];
        }
    }
    sigma = order.iter().map(|&k| sigma[k]).collect();

    let cutoff = tol::rank_threshold(n, sigma.first().copied().unwrap_or(R::zero()));
    let mut u_cols: Vec<Vec<C<R>>> = Vec::with_capacity(n);
    for j in 0..n {
        if sigma[j] > cutoff {
            u_cols.push((0..n).map(|i| ws[(i, j)] / cx(sigma[j])).collect());
        }
    }
    complete_orthonormal_complex(&mut u_cols, n);
    let mut u = CMatrix::zeros(n);
    for (j, col) in u_cols.iter().enumerate() {
        for i in 0..n {
            u[(i, j)] = col[i];
        }
    }
    ComplexSvd { u, sigma, v: vs }
}

fn complete_orthonormal_complex<R: Real>(cols: &mut Vec<Vec<C<R>>>, n: usize) {
    let zero = C::new(R::zero(), R::zero());
    while cols.len() < n {
        let mut best: Option<(R, Vec<C<R>>)> = None;
        for e in 0..n {
            let mut cand = vec![zero; n];
            cand[e] = cx(R::one());
            for c in cols.iter() {
                let dot: C<R> = (0..n).map(|i| c[i].conj() * cand[i]).sum();
                for i in 0..n {
                    cand[i] -= dot * c[i];
                }
            }
            let norm = cand.iter().map(|x| x.norm_sqr()).sum::<R>().sqrt();
            if best.as_ref().is_none_or(|(b, _)| norm > *b) {
                best = Some((norm, cand));
            }
        }
        let (norm, mut cand) = best.unwrap();
        assert!(norm > R::epsilon(), "failed to complete orthonormal basis");
        for x in cand.iter_mut() {
            *x /= cx(norm);
        }
        cols.push(cand);
    }
}

/// Moore–Penrose pseudoinverse of a real N×M matrix with the default rank
/// threshold max(N, M)·ε·σ_max.
pub fn pseudoinverse<R: Real>(a: &RMatrix<R>) -> RMatrix<R> {
    let svd = svd_real(a);
    let thr = svd.default_rank_threshold();
    svd.pinv(thr)
}

/// Pseudoinverse with a caller-supplied absolute rank threshold.
pub fn pseudoinverse_with<R: Real>(a: &RMatrix<R>, rank_threshold: R) -> RMatrix<R> {
    svd_real(a).pinv(rank_threshold)
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = RMatrix<f64>;

    fn penrose_ok(a: &M, p: &M, tol: f64) -> bool {
        let apa = &a.mul_mat(p).mul_mat(a) - a;
        let pap = &p.mul_mat(a).mul_mat(p) - p;
        let ap = a.mul_mat(p);
        let pa = p.mul_mat(a);
        let sym1 = &ap - &ap.transpose();
        let sym2 = &pa - &pa.transpose();
        apa.fro_norm() <= tol
            && pap.fro_norm() <= tol
            && sym1.fro_norm() <= tol
            && sym2.fro_norm() <= tol
    }

    #[test]
    fn identity_and_zero() {
        let id = M::identity(3);
        assert!((&pseudoinverse(&id) - &id).fro_norm() < 1e-14);
        let z = M::zeros(2, 4);
        let p = pseudoinverse(&z);
        assert_eq!((p.rows(), p.cols()), (4, 2));
        assert_eq!(p.fro_norm(), 0.0);
    }

    #[test]
    fn inverse_of_invertible_square() {
        let a = M::from_f64(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let p = pseudoinverse(&a);
        assert!((&a.mul_mat(&p) - &M::identity(2)).fro_norm() < 1e-12);
    }

    #[test]
    fn calibration_matrix_singular_values_at_g() {
        // 2×3 matrix [[(½+g)², (½−g)², ½−2g²], [(½−g)², (½+g)², ½−2g²]]
        // has singular values 2g and ½√(48g⁴−8g²+3).
        let g = 0.1f64;
        let a = M::from_f64(
            2,
            3,
            &[
                (0.5 + g) * (0.5 + g),
                (0.5 - g) * (0.5 - g),
                0.5 - 2.0 * g * g,
                (0.5 - g) * (0.5 - g),
                (0.5 + g) * (0.5 + g),
                0.5 - 2.0 * g * g,
            ],
        );
        let svd = svd_real(&a);
        let expect_hi = 0.5 * (48.0 * g.powi(4) - 8.0 * g * g + 3.0f64).sqrt();
        let expect_lo = 2.0 * g;
        assert!((svd.sigma[0] - expect_hi).abs() < 1e-12);
        assert!((svd.sigma[1] - expect_lo).abs() < 1e-12);
        // Pseudoinverse singular values are the inverses.
        let p = svd.pinv(svd.default_rank_threshold());
        let psvd = svd_real(&p);
        assert!((psvd.sigma[0] - 1.0 / expect_lo).abs() < 1e-10);
        assert!((psvd.sigma[1] - 1.0 / expect_hi).abs() < 1e-12);
    }

    #[test]
    fn reconstruction_and_penrose_on_fixed_cases() {
        let cases = [
            M::from_f64(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]),
            M::from_f64(2, 3, &[1.0, 1.0, 0.0, 0.0, 1.0, 1.0]),
            M::from_f64(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.5, 1.0, 1.5]),
        ];
        for a in &cases {
            let svd = svd_real(a);
            assert!((&svd.reconstruct() - a).fro_norm() < 1e-12 * a.fro_norm().max(1.0));
            let p = svd.pinv(svd.default_rank_threshold());
            assert!(penrose_ok(a, &p, 1e-10));
            // Orthogonality of the factors.
            let uut = &svd.u.mul_mat(&svd.u.transpose()) - &M::identity(a.rows());
            let vvt = &svd.v.mul_mat(&svd.v.transpose()) - &M::identity(a.cols());
            assert!(uut.fro_norm() < 1e-12);
            assert!(vvt.fro_norm() < 1e-12);
        }
    }

    #[test]
    fn null_space_of_rank_deficient() {
        let a = M::from_f64(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.5, 1.0, 1.5]);
        let svd = svd_real(&a);
        let ns = svd.null_space(svd.default_rank_threshold());
        assert_eq!(ns.len(), 2);
        for v in &ns {
            let av = a.mul_vec(v);
            assert!(av.iter().map(|x| x * x).sum::<f64>().sqrt() < 1e-12);
        }
    }

    #[test]
    fn complex_svd_reconstructs_and_is_unitary() {
        use crate::scalar::c64;
        let a = CMatrix::from_rows(&[
            vec![c64(0.4, 0.3), c64(-0.2, 0.9)],
            vec![c64(1.1, 0.0), c64(0.0, -0.5)],
        ]);
        let svd = svd_complex(&a);
        assert!(svd.reconstruct().approx_eq(&a, 1e-12));
        let id = CMatrix::identity(2);
        assert!(svd.u.adjoint().mul_mat(&svd.u).approx_eq(&id, 1e-12));
        assert!(svd.v.adjoint().mul_mat(&svd.v).approx_eq(&id, 1e-12));
        assert!(svd.sigma[0] >= svd.sigma[1] && svd.sigma[1] >= 0.0);
    }
}
