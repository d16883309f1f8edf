//! Positive square roots, polar decomposition and the principal logarithm of
//! unitary matrices.

use super::cmatrix::CMatrix;
use super::eigen::{hermitian_eigen, merge_eigenspaces};
use super::svd::svd_complex;
use crate::error::{Error, Result};
use crate::scalar::{Real, C};
use crate::tol;

/// Factors of `m = unitary · root` with `root = (m†m)^{1/2}` PSD Hermitian.
#[derive(Debug, Clone)]
pub struct PolarFactors<R: Real> {
    pub unitary: CMatrix<R>,
    pub root: CMatrix<R>,
}

/// Principal (positive) square root of a PSD Hermitian matrix.
///
/// Eigenvalues inside `[-floor, 0)` are clamped to zero; anything below the
/// floor is rejected.
pub fn principal_sqrt<R: Real>(m: &CMatrix<R>) -> Result<CMatrix<R>> {
    m.check_hermitian()?;
    let eig = hermitian_eigen(m);
    let floor = tol::positivity::<R>() * m.fro_norm().max(R::one());
    let mut out = CMatrix::zeros(m.dim());
    for (k, &lambda) in eig.values.iter().enumerate() {
        if lambda < -floor {
            return Err(Error::NotPositive {
                min_eig: lambda.to_f64().unwrap_or(f64::NAN),
                tol: floor.to_f64().unwrap_or(f64::NAN),
            });
        }
        let root = lambda.max(R::zero()).sqrt();
        if root.is_zero() {
            continue;
        }
        let v = eig.eigenvector(k);
        out = &out + &CMatrix::outer(&v, &v).scale_re(root);
    }
    Ok(out)
}

/// Polar decomposition `m = u · p` via the SVD: `u = U·V†`, `p = V·Σ·V†`.
///
/// For singular `m` the unitary factor is completed on the kernel from the
/// SVD factors, which keeps the result deterministic.
pub fn polar_decompose<R: Real>(m: &CMatrix<R>) -> PolarFactors<R> {
    let svd = svd_complex(m);
    let unitary = svd.u.mul_mat(&svd.v.adjoint());
    let n = m.dim();
    let mut root = CMatrix::zeros(n);
    for k in 0..n {
        if svd.sigma[k].is_zero() {
            continue;
        }
        let v: Vec<C<R>> = (0..n).map(|i| svd.v[(i, k)]).collect();
        root = &root + &CMatrix::outer(&v, &v).scale_re(svd.sigma[k]);
    }
    PolarFactors { unitary, root }
}

/// Principal logarithm of a unitary matrix: the skew-Hermitian `L` with
/// eigenphases in (−π, π] such that `exp(L) = u`.
///
/// A unitary matrix is normal, so it is diagonalized by simultaneously
/// diagonalizing the commuting Hermitian pair (u + u†)/2 and (u − u†)/2i.
pub fn log_unitary<R: Real>(u: &CMatrix<R>) -> Result<CMatrix<R>> {
    let n = u.dim();
    let defect = (&u.adjoint().mul_mat(u) - &CMatrix::identity(n)).fro_norm();
    let utol = tol::hermiticity::<R>() * R::of(100.0) * R::of(n as f64);
    if defect > utol {
        return Err(Error::Invalid(format!(
            "matrix is not unitary: ‖u†u − 1‖ = {:e}",
            defect.to_f64().unwrap_or(f64::NAN)
        )));
    }

    let half = R::of(0.5);
    let re_part = (u + &u.adjoint()).scale_re(half);
    let im_part = (u - &u.adjoint()).scale(C::new(R::zero(), -half));

    // Joint eigenbasis: diagonalize the real part, then refine degenerate
    // clusters with the imaginary part.
    let eig = hermitian_eigen(&re_part);
    let spaces = merge_eigenspaces(&eig);
    let mut basis: Vec<Vec<C<R>>> = Vec::with_capacity(n);
    for space in &spaces {
        if space.rank() == 1 {
            basis.push(space.basis[0].clone());
            continue;
        }
        let d = space.rank();
        // Restriction of the imaginary part to the cluster.
        let mut block = CMatrix::zeros(d);
        for a in 0..d {
            for b in 0..d {
                let kb = im_part.mul_vec(&space.basis[b]);
                let dot: C<R> = (0..n).map(|i| space.basis[a][i].conj() * kb[i]).sum();
                block[(a, b)] = dot;
            }
        }
        let sub = hermitian_eigen(&block);
        for k in 0..d {
            let mut vec = vec![C::new(R::zero(), R::zero()); n];
            for b in 0..d {
                let coeff = sub.vectors[(b, k)];
                for (vi, &bi) in vec.iter_mut().zip(&space.basis[b]) {
                    *vi += bi * coeff;
                }
            }
            basis.push(vec);
        }
    }

    let mut log = CMatrix::zeros(n);
    let mut rebuilt = CMatrix::zeros(n);
    for v in &basis {
        let uv = u.mul_vec(v);
        let z: C<R> = (0..n).map(|i| v[i].conj() * uv[i]).sum();
        let theta = z.im.atan2(z.re);
        log = &log + &CMatrix::outer(v, v).scale(C::new(R::zero(), theta));
        rebuilt = &rebuilt + &CMatrix::outer(v, v).scale(z);
    }
    let residual = (&rebuilt - u).fro_norm();
    if residual > utol {
        return Err(Error::Invalid(format!(
            "failed to diagonalize unitary: residual {:e}",
            residual.to_f64().unwrap_or(f64::NAN)
        )));
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c64;

    type M = CMatrix<f64>;

    /// Test-only matrix exponential by scaling and squaring a Taylor series.
    fn expm(m: &M) -> M {
        let norm = m.fro_norm();
        let k = if norm > 0.5 {
            (norm / 0.5).log2().ceil() as i32
        } else {
            0
        };
        let scaled = m.scale_re(0.5f64.powi(k));
        let mut term = M::identity(m.dim());
        let mut acc = M::identity(m.dim());
        for j in 1..24 {
            term = term.mul_mat(&scaled).scale_re(1.0 / j as f64);
            acc = &acc + &term;
        }
        let mut out = acc;
        for _ in 0..k {
            out = out.mul_mat(&out);
        }
        out
    }

    fn rotation(theta: f64) -> M {
        M::from_real_f64(
            2,
            &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()],
        )
    }

    #[test]
    fn sqrt_of_diagonal() {
        let m = M::from_real_f64(2, &[4.0, 0.0, 0.0, 9.0]);
        let r = principal_sqrt(&m).unwrap();
        assert!(r.approx_eq(&M::from_real_f64(2, &[2.0, 0.0, 0.0, 3.0]), 1e-12));
        let id = M::identity(3);
        assert!(principal_sqrt(&id).unwrap().approx_eq(&id, 1e-13));
        // Entrywise root of a PSD diagonal: diag(0.6, 0.4).
        let m = M::from_real_f64(2, &[0.6, 0.0, 0.0, 0.4]);
        let expect = M::from_real_f64(2, &[0.6f64.sqrt(), 0.0, 0.0, 0.4f64.sqrt()]);
        assert!(principal_sqrt(&m).unwrap().approx_eq(&expect, 1e-14));
    }

    #[test]
    fn sqrt_squares_back() {
        let b = M::from_rows(&[
            vec![c64(1.0, 0.0), c64(0.4, 0.2)],
            vec![c64(0.4, -0.2), c64(0.7, 0.0)],
        ]);
        let m = b.mul_mat(&b.adjoint());
        let r = principal_sqrt(&m).unwrap();
        assert!(r.mul_mat(&r).approx_eq(&m, 1e-10 * m.fro_norm().max(1.0)));
        assert!(r.hermitian_defect() < 1e-12);
    }

    #[test]
    fn sqrt_rejects_negative() {
        let m = M::from_real_f64(2, &[1.0, 0.0, 0.0, -0.5]);
        assert!(matches!(
            principal_sqrt(&m),
            Err(Error::NotPositive { .. })
        ));
    }

    #[test]
    fn polar_of_psd_is_identity_unitary() {
        let m = M::from_real_f64(2, &[0.6, 0.0, 0.0, 0.4]);
        let pf = polar_decompose(&m);
        assert!(pf.unitary.approx_eq(&M::identity(2), 1e-12));
        assert!(pf.root.approx_eq(&m, 1e-12));
    }

    #[test]
    fn polar_of_unitary_is_trivial_root() {
        let u = rotation(0.3);
        let pf = polar_decompose(&u);
        assert!(pf.unitary.approx_eq(&u, 1e-12));
        assert!(pf.root.approx_eq(&M::identity(2), 1e-12));
    }

    #[test]
    fn polar_round_trip() {
        let u = rotation(-0.7);
        let p = M::from_real_f64(2, &[0.9, 0.2, 0.2, 0.5]);
        let m = u.mul_mat(&p);
        let pf = polar_decompose(&m);
        assert!(pf.unitary.approx_eq(&u, 1e-10));
        assert!(pf.root.approx_eq(&p, 1e-10));
        assert!(pf.unitary.mul_mat(&pf.root).approx_eq(&m, 1e-12));
    }

    #[test]
    fn log_of_rotation_matches_generator() {
        let theta = 0.25;
        let u = rotation(theta);
        let l = log_unitary(&u).unwrap();
        // Generator of a 2D rotation: θ·[[0, −1], [1, 0]].
        let expect = M::from_real_f64(2, &[0.0, -theta, theta, 0.0]);
        assert!(l.approx_eq(&expect, 1e-10));
        assert!(expm(&l).approx_eq(&u, 1e-10));
    }

    #[test]
    fn log_handles_degenerate_phases() {
        // diag(e^{iθ}, e^{iθ}) has a degenerate real part.
        let theta = 1.1f64;
        let u = M::diag(&[c64(theta.cos(), theta.sin()), c64(theta.cos(), theta.sin())]);
        let l = log_unitary(&u).unwrap();
        let expect = M::diag(&[c64(0.0, theta), c64(0.0, theta)]);
        assert!(l.approx_eq(&expect, 1e-10));
    }

    #[test]
    fn log_rejects_non_unitary() {
        let m = M::from_real_f64(2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(log_unitary(&m).is_err());
    }
}
