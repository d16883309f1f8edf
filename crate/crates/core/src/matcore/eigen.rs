//! Cyclic Jacobi eigendecomposition for dense Hermitian matrices.

use super::cmatrix::CMatrix;
use crate::error::{Error, Result};
use crate::scalar::{cx, Real, C};
use crate::tol;

const MAX_SWEEPS: usize = 60;

/// Eigendecomposition of a Hermitian matrix: eigenvalues descending,
/// eigenvectors as the columns of a unitary matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen<R: Real> {
    pub values: Vec<R>,
    /// Unitary matrix whose column `k` is the eigenvector of `values[k]`.
    pub vectors: CMatrix<R>,
}

impl<R: Real> HermitianEigen<R> {
    pub fn eigenvector(&self, k: usize) -> Vec<C<R>> {
        (0..self.vectors.dim())
            .map(|i| self.vectors[(i, k)])
            .collect()
    }
}

/// Diagonalizes a Hermitian matrix by cyclic Jacobi rotations.
///
/// The input is symmetrized first, so callers must check Hermiticity
/// themselves when a defect should be an error.
pub fn hermitian_eigen<R: Real>(m: &CMatrix<R>) -> HermitianEigen<R> {
    let n = m.dim();
    let mut h = m.hermitian_part();
    let mut v = CMatrix::identity(n);
    let scale = h.fro_norm().max(R::epsilon());
    let stop = R::epsilon() * scale;

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let hpq = h[(p, q)];
                if hpq.norm() <= stop {
                    continue;
                }
                rotated = true;
                let (c, s, w) = rotation_for(h[(p, p)].re, h[(q, q)].re, hpq);
                apply_two_sided(&mut h, p, q, c, s, w);
                apply_right(&mut v, p, q, c, s, w);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut values: Vec<R> = (0..n).map(|i| h[(i, i)].re).collect();
    // Sort eigenpairs by descending eigenvalue.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap());
    let mut vectors = CMatrix::zeros(n);
    for (new, &old) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, new)] = v[(i, old)];
        }
    }
    values = order.iter().map(|&k| values[k]).collect();
    HermitianEigen { values, vectors }
}

/// Unitary 2×2 parameters zeroing the (p,q) entry of a Hermitian block
/// [[a, h], [h̄, b]]: a real rotation (c, s) combined with the phase w of h.
fn rotation_for<R: Real>(a: R, b: R, h: C<R>) -> (R, R, C<R>) {
    let habs = h.norm();
    let w = h / cx(habs);
    let tau = (b - a) / (R::of(2.0) * habs);
    let t = if tau >= R::zero() {
        R::one() / (tau + (R::one() + tau * tau).sqrt())
    } else {
        -R::one() / (-tau + (R::one() + tau * tau).sqrt())
    };
    let c = R::one() / (R::one() + t * t).sqrt();
    let s = c * t;
    (c, s, w)
}

/// H ← G†HG with G the plane rotation: G[p][p]=c, G[p][q]=s,
/// G[q][p]=−s·w̄, G[q][q]=c·w̄, where w is the unimodular phase.
fn apply_two_sided<R: Real>(h: &mut CMatrix<R>, p: usize, q: usize, c: R, s: R, w: C<R>) {
    apply_right(h, p, q, c, s, w);
    // Row update with G†: rows p, q mix with weights (c, −s·w) and (s, c·w).
    let n = h.dim();
    for j in 0..n {
        let hp = h[(p, j)];
        let hq = h[(q, j)];
        h[(p, j)] = hp * cx(c) - hq * w * cx(s);
        h[(q, j)] = hp * cx(s) + hq * w * cx(c);
    }
    // Rounding can leave small imaginary parts on the diagonal.
    h[(p, p)] = cx(h[(p, p)].re);
    h[(q, q)] = cx(h[(q, q)].re);
}

/// M ← M·G (column update).
fn apply_right<R: Real>(m: &mut CMatrix<R>, p: usize, q: usize, c: R, s: R, w: C<R>) {
    let n = m.dim();
    let wc = w.conj();
    for i in 0..n {
        let mp = m[(i, p)];
        let mq = m[(i, q)];
        m[(i, p)] = mp * cx(c) - mq * wc * cx(s);
        m[(i, q)] = mp * cx(s) + mq * wc * cx(c);
    }
}

/// One merged eigenspace of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct EigenSpace<R: Real> {
    pub value: R,
    /// Orthogonal projector onto the eigenspace.
    pub projector: CMatrix<R>,
    /// Orthonormal basis (columns).
    pub basis: Vec<Vec<C<R>>>,
}

impl<R: Real> EigenSpace<R> {
    pub fn rank(&self) -> usize {
        self.basis.len()
    }
}

/// Spectral decomposition with near-degenerate eigenvalues merged into a
/// single eigenspace, so the projector count equals the count of distinct
/// eigenvalues. Rejects non-Hermitian input.
pub fn spectral_decompose<R: Real>(m: &CMatrix<R>) -> Result<Vec<EigenSpace<R>>> {
    m.check_hermitian()?;
    let eig = hermitian_eigen(m);
    Ok(merge_eigenspaces(&eig))
}

/// Groups sorted eigenpairs into eigenspaces using the relative merge
/// threshold.
pub fn merge_eigenspaces<R: Real>(eig: &HermitianEigen<R>) -> Vec<EigenSpace<R>> {
    let n = eig.values.len();
    let max_abs = eig
        .values
        .iter()
        .map(|v| v.abs())
        .fold(R::zero(), |a, b| a.max(b));
    let thr = tol::eigen_merge::<R>() * max_abs.max(R::of(n as f64) * R::epsilon());

    let mut spaces = Vec::new();
    let mut k = 0;
    while k < n {
        let mut stop = k + 1;
        // Chain-merge: descending order makes consecutive gaps sufficient.
        while stop < n && (eig.values[stop - 1] - eig.values[stop]).abs() <= thr {
            stop += 1;
        }
        let members: Vec<usize> = (k..stop).collect();
        let value = members
            .iter()
            .map(|&i| eig.values[i])
            .fold(R::zero(), |a, b| a + b)
            / R::of(members.len() as f64);
        let basis: Vec<Vec<C<R>>> = members.iter().map(|&i| eig.eigenvector(i)).collect();
        let mut projector = CMatrix::zeros(eig.vectors.dim());
        for b in &basis {
            projector = &projector + &CMatrix::outer(b, b);
        }
        spaces.push(EigenSpace {
            value,
            projector,
            basis,
        });
        k = stop;
    }
    spaces
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue<R: Real>(m: &CMatrix<R>) -> R {
    let eig = hermitian_eigen(m);
    *eig.values.last().unwrap()
}

/// Checks that a Hermitian matrix is PSD within the default relative floor.
pub fn check_psd<R: Real>(m: &CMatrix<R>) -> Result<()> {
    m.check_hermitian()?;
    let floor = tol::positivity::<R>() * m.fro_norm().max(R::one());
    let min = min_eigenvalue(m);
    if min < -floor {
        return Err(Error::NotPositive {
            min_eig: min.to_f64().unwrap_or(f64::NAN),
            tol: floor.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c64;

    type M = CMatrix<f64>;

    #[test]
    fn diagonal_matrix_is_its_own_decomposition() {
        let m = M::from_real_f64(2, &[3.0, 0.0, 0.0, 7.0]);
        let spaces = spectral_decompose(&m).unwrap();
        assert_eq!(spaces.len(), 2);
        assert!((spaces[0].value - 7.0).abs() < 1e-12);
        assert!((spaces[1].value - 3.0).abs() < 1e-12);
        assert!(spaces[0]
            .projector
            .approx_eq(&M::from_real_f64(2, &[0.0, 0.0, 0.0, 1.0]), 1e-12));
    }

    #[test]
    fn identity_merges_into_one_eigenspace() {
        let spaces = spectral_decompose(&M::identity(2)).unwrap();
        assert_eq!(spaces.len(), 1);
        assert!((spaces[0].value - 1.0).abs() < 1e-14);
        assert_eq!(spaces[0].rank(), 2);
        assert!(spaces[0].projector.approx_eq(&M::identity(2), 1e-12));
    }

    #[test]
    fn pauli_x_eigenspaces() {
        // Hand 2×2 oracle: eigenvectors (1, ±1)/√2 with eigenvalues ±1.
        let m = M::from_real_f64(2, &[0.0, 1.0, 1.0, 0.0]);
        let spaces = spectral_decompose(&m).unwrap();
        assert_eq!(spaces.len(), 2);
        assert!((spaces[0].value - 1.0).abs() < 1e-12);
        assert!((spaces[1].value + 1.0).abs() < 1e-12);
        let plus = M::from_real_f64(2, &[0.5, 0.5, 0.5, 0.5]);
        let minus = M::from_real_f64(2, &[0.5, -0.5, -0.5, 0.5]);
        assert!(spaces[0].projector.approx_eq(&plus, 1e-12));
        assert!(spaces[1].projector.approx_eq(&minus, 1e-12));
    }

    #[test]
    fn complex_hermitian_reconstructs() {
        let m = M::from_rows(&[
            vec![c64(2.0, 0.0), c64(0.3, -0.7), c64(0.1, 0.2)],
            vec![c64(0.3, 0.7), c64(-1.0, 0.0), c64(0.0, -0.4)],
            vec![c64(0.1, -0.2), c64(0.0, 0.4), c64(0.5, 0.0)],
        ]);
        let spaces = spectral_decompose(&m).unwrap();
        let mut rebuilt = M::zeros(3);
        let mut psum = M::zeros(3);
        for s in &spaces {
            rebuilt = &rebuilt + &s.projector.scale_re(s.value);
            psum = &psum + &s.projector;
            // Idempotent.
            assert!(s.projector.mul_mat(&s.projector).approx_eq(&s.projector, 1e-10));
        }
        assert!(rebuilt.approx_eq(&m, 1e-10));
        assert!(psum.approx_eq(&M::identity(3), 1e-10));
        // Mutual orthogonality.
        for i in 0..spaces.len() {
            for j in i + 1..spaces.len() {
                let prod = spaces[i].projector.mul_mat(&spaces[j].projector);
                assert!(prod.fro_norm() < 1e-10);
            }
        }
    }

    #[test]
    fn non_hermitian_rejected_with_defect() {
        let m = M::from_real_f64(2, &[0.0, 1.0, 0.0, 0.0]);
        match spectral_decompose(&m) {
            Err(Error::NotHermitian { defect, .. }) => {
                assert!((defect - (2.0f64).sqrt()).abs() < 1e-12)
            }
            other => panic!("expected Hermiticity rejection, got {other:?}"),
        }
    }
}
