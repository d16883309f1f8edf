//! Matrix-valued functions of the coupling `g` and their Taylor expansion
//! around 0.

use super::GExpr;
use crate::error::{Error, Result};
use crate::fitting::poly_fit;
use crate::matcore::CMatrix;
use crate::scalar::Real;

/// Validity interval [lo, hi] for the coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GRange<R: Real> {
    pub lo: R,
    pub hi: R,
}

impl<R: Real> GRange<R> {
    pub fn new(lo: R, hi: R) -> Self {
        assert!(lo >= R::zero() && hi > lo, "invalid coupling range");
        Self { lo, hi }
    }

    /// [0, hi].
    pub fn up_to(hi: R) -> Self {
        Self::new(R::zero(), hi)
    }

    pub fn contains(&self, g: R) -> bool {
        g >= self.lo && g <= self.hi
    }

    /// Geometric sample of the interval, spanning three decades below `hi`
    /// when the lower end is 0.
    pub fn sample(&self, points: usize) -> Vec<R> {
        let lo = if self.lo > R::zero() {
            self.lo
        } else {
            self.hi * R::of(1e-3)
        };
        crate::fitting::geometric_grid(lo, self.hi, points)
    }
}

/// A dim×dim grid of real coupling expressions: one measurement operator
/// M(g) viewed as a function of g.
#[derive(Debug, Clone, PartialEq)]
pub struct GMatrixFn<R: Real> {
    dim: usize,
    entries: Vec<GExpr<R>>,
    validity: GRange<R>,
}

impl<R: Real> GMatrixFn<R> {
    pub fn new(dim: usize, entries: Vec<GExpr<R>>, validity: GRange<R>) -> Self {
        assert_eq!(entries.len(), dim * dim, "entry count must equal dim²");
        Self {
            dim,
            entries,
            validity,
        }
    }

    /// Parses a row-major grid of expression sources.
    pub fn parse_entries(dim: usize, sources: &[&str], validity: GRange<R>) -> Result<Self> {
        assert_eq!(sources.len(), dim * dim);
        let entries = sources
            .iter()
            .map(|s| super::parse(s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(dim, entries, validity))
    }

    /// Constant matrix function from real entries.
    pub fn constant(dim: usize, entries: &[R], validity: GRange<R>) -> Self {
        assert_eq!(entries.len(), dim * dim);
        Self::new(
            dim,
            entries.iter().map(|&x| GExpr::num(x)).collect(),
            validity,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn validity(&self) -> GRange<R> {
        self.validity
    }

    pub fn entry(&self, i: usize, j: usize) -> &GExpr<R> {
        &self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[GExpr<R>] {
        &self.entries
    }

    pub fn is_g_independent(&self) -> bool {
        self.entries.iter().all(|e| e.is_constant())
    }

    /// True when some entry takes a square root of a g-dependent argument,
    /// i.e. the function is expandable around 0 only one-sidedly.
    pub fn has_one_sided_entries(&self) -> bool {
        self.entries.iter().any(|e| e.has_g_dependent_sqrt())
    }

    /// Evaluates at a coupling inside the validity interval.
    pub fn eval_at(&self, g: R) -> Result<CMatrix<R>> {
        if !self.validity.contains(g) {
            return Err(Error::OutsideValidity {
                g: g.to_f64().unwrap_or(f64::NAN),
                lo: self.validity.lo.to_f64().unwrap_or(f64::NAN),
                hi: self.validity.hi.to_f64().unwrap_or(f64::NAN),
            });
        }
        let mut m = CMatrix::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let v = self.entry(i, j).eval(g)?;
                if !v.is_finite() {
                    return Err(Error::Domain {
                        expr: self.entry(i, j).to_string(),
                        g: g.to_f64().unwrap_or(f64::NAN),
                        msg: "non-finite entry value".into(),
                    });
                }
                m[(i, j)] = crate::scalar::cx(v);
            }
        }
        Ok(m)
    }
}

/// Taylor coefficients of a matrix function around g = 0, with the held-out
/// residual that certified the fit.
#[derive(Debug, Clone)]
pub struct TaylorSeries<R: Real> {
    /// Coefficient matrices of g⁰ … g^order.
    pub coeffs: Vec<CMatrix<R>>,
    /// Residual ‖f(g*) − Σ Cₘ g*ᵐ‖ at the held-out sample g*.
    pub heldout_residual: R,
    /// Anchor of the extraction grid.
    pub g0: R,
}

impl<R: Real> TaylorSeries<R> {
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, g: R) -> CMatrix<R> {
        let dim = self.coeffs[0].dim();
        let mut acc = CMatrix::zeros(dim);
        let mut p = R::one();
        for c in &self.coeffs {
            acc = &acc + &c.scale_re(p);
            p *= g;
        }
        acc
    }
}

/// Default anchor for coefficient extraction.
pub fn default_taylor_anchor<R: Real>(validity: GRange<R>) -> R {
    R::of(1e-2).min(validity.hi * R::of(0.9))
}

/// Estimates the Taylor coefficients of g⁰…g^order by a least-squares
/// polynomial fit over the geometric grid {g₀, g₀/2, …, g₀/2^K}, then checks
/// the fit on a held-out sample between the two largest grid points.
pub fn taylor_coeffs<R: Real>(f: &GMatrixFn<R>, order: usize) -> Result<TaylorSeries<R>> {
    taylor_coeffs_at(f, order, default_taylor_anchor(f.validity()))
}

/// As [`taylor_coeffs`], anchored at a caller-chosen g₀.
pub fn taylor_coeffs_at<R: Real>(
    f: &GMatrixFn<R>,
    order: usize,
    g0: R,
) -> Result<TaylorSeries<R>> {
    taylor_fit_fn(|g| f.eval_at(g), f.dim(), order, g0)
}

/// Core of the extraction, usable for any matrix-valued sample source (the
/// order analysis feeds it evaluated POVM elements rather than expression
/// grids).
///
/// Two fits run per entry: a plain degree-`order` fit and a guarded fit two
/// orders higher. Entries that the plain fit already reproduces to machine
/// level are polynomials of degree ≤ order, and keep the plain (sharper)
/// coefficients; anything else takes the guarded coefficients, whose extra
/// orders soak up truncation bias. The guarded fit's held-out residual is the
/// analyticity certificate: entries with a branch point at 0, like √g, miss
/// it by many orders of magnitude.
pub fn taylor_fit_fn<R: Real>(
    eval: impl Fn(R) -> Result<CMatrix<R>>,
    dim: usize,
    order: usize,
    g0: R,
) -> Result<TaylorSeries<R>> {
    assert!(order <= 6, "expansion order capped at 6");
    assert!(g0 > R::zero());
    let guard_order = order + 2;
    let steps = 2 * guard_order + 4;
    let half = R::of(0.5);
    let grid: Vec<R> = (0..=steps).map(|k| g0 * half.powi(k as i32)).collect();

    let samples: Vec<CMatrix<R>> = grid.iter().map(|&g| eval(g)).collect::<Result<Vec<_>>>()?;
    let g_test = g0 * R::of(0.7);
    let exact = eval(g_test)?;

    let scale = samples
        .iter()
        .map(|m| m.max_abs())
        .fold(R::one(), |a, b| a.max(b));
    let machine = R::epsilon() * R::of(5e3) * scale;

    let mut coeffs = vec![CMatrix::zeros(dim); order + 1];
    let mut cert_residual = R::zero();
    let mut trunc_residual = R::zero();
    for i in 0..dim {
        for j in 0..dim {
            let ys: Vec<R> = samples.iter().map(|m| m[(i, j)].re).collect();
            let plain = poly_fit(&grid, &ys, order);
            let guarded = poly_fit(&grid, &ys, guard_order);
            let y_test = exact[(i, j)].re;
            let plain_resid = (y_test - crate::fitting::poly_eval(&plain, g_test)).abs();
            let guarded_full = (y_test - crate::fitting::poly_eval(&guarded, g_test)).abs();
            cert_residual = cert_residual.max(guarded_full.min(plain_resid));

            let use_plain = plain_resid <= machine;
            let chosen: &[R] = if use_plain { &plain } else { &guarded[..=order] };
            for (m, &c) in chosen.iter().enumerate() {
                coeffs[m][(i, j)] = crate::scalar::cx(c);
            }
            let truncated = (y_test - crate::fitting::poly_eval(chosen, g_test)).abs();
            trunc_residual = trunc_residual.max(truncated);
        }
    }

    let tol = crate::tol::taylor_fit::<R>() * scale;
    if cert_residual > tol {
        return Err(Error::NonAnalytic {
            residual: cert_residual.to_f64().unwrap_or(f64::NAN),
            tol: tol.to_f64().unwrap_or(f64::NAN),
        });
    }

    Ok(TaylorSeries {
        coeffs,
        heldout_residual: trunc_residual,
        g0,
    })
}
