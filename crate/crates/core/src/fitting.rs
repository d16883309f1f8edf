//! Least-squares fitting helpers shared by the Taylor-coefficient extractor,
//! the variance-bound series analysis and the weak-limit extrapolation.

use crate::matcore::{svd_real, RMatrix};
use crate::scalar::Real;

/// Least-squares polynomial fit `y ≈ Σ_m c_m x^m` of degree `degree`.
///
/// The abscissas are rescaled by their maximum before building the
/// Vandermonde system, which keeps the fit well-conditioned on the geometric
/// grids used throughout the crate.
pub fn poly_fit<R: Real>(xs: &[R], ys: &[R], degree: usize) -> Vec<R> {
    assert!(xs.len() == ys.len() && !xs.is_empty());
    assert!(
        xs.len() > degree,
        "need at least degree + 1 samples for a degree-{degree} fit"
    );
    let xmax = xs
        .iter()
        .map(|x| x.abs())
        .fold(R::zero(), |a, b| a.max(b))
        .max(R::epsilon());

    let rows = xs.len();
    let cols = degree + 1;
    let mut design = RMatrix::zeros(rows, cols);
    for (i, &x) in xs.iter().enumerate() {
        let t = x / xmax;
        let mut p = R::one();
        for m in 0..cols {
            design[(i, m)] = p;
            p *= t;
        }
    }
    let svd = svd_real(&design);
    let thr = svd.default_rank_threshold();
    let mut scaled = svd.solve_min_norm(ys, thr);
    // One step of iterative refinement recovers most of the accuracy the
    // ill-conditioned Vandermonde costs.
    let fitted = design.mul_vec(&scaled);
    let resid: Vec<R> = ys.iter().zip(&fitted).map(|(&y, &f)| y - f).collect();
    let correction = svd.solve_min_norm(&resid, thr);
    for (c, dc) in scaled.iter_mut().zip(&correction) {
        *c += *dc;
    }
    // Undo the rescaling: c_m = ĉ_m / xmax^m.
    let mut unscale = R::one();
    scaled
        .into_iter()
        .map(|c| {
            let out = c / unscale;
            unscale *= xmax;
            out
        })
        .collect()
}

pub fn poly_eval<R: Real>(coeffs: &[R], x: R) -> R {
    coeffs
        .iter()
        .rev()
        .fold(R::zero(), |acc, &c| acc * x + c)
}

/// Laurent-style fit with poles up to order `max_pole`:
/// `y ≈ Σ_{m=-max_pole}^{poly_degree} c_m x^m`.
///
/// Implemented as a polynomial fit of `y·x^max_pole`, which avoids the
/// wildly scaled columns a direct basis {x⁻ᵐ…xᵖ} would produce. Returns
/// coefficients indexed from the most negative order upward.
#[derive(Debug, Clone)]
pub struct PoleFit<R: Real> {
    /// Power of the first coefficient (−max_pole).
    pub min_order: i32,
    /// Coefficients for x^min_order, x^(min_order+1), …
    pub coeffs: Vec<R>,
}

impl<R: Real> PoleFit<R> {
    /// Coefficient of x^order, zero when outside the fitted window.
    pub fn coeff(&self, order: i32) -> R {
        let idx = order - self.min_order;
        if idx < 0 {
            return R::zero();
        }
        self.coeffs.get(idx as usize).copied().unwrap_or(R::zero())
    }

    pub fn eval(&self, x: R) -> R {
        let mut acc = R::zero();
        for (i, &c) in self.coeffs.iter().enumerate() {
            let order = self.min_order + i as i32;
            acc += c * x.powi(order);
        }
        acc
    }
}

pub fn pole_fit<R: Real>(xs: &[R], ys: &[R], max_pole: u32, poly_degree: usize) -> PoleFit<R> {
    let shifted: Vec<R> = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| y * x.powi(max_pole as i32))
        .collect();
    let coeffs = poly_fit(xs, &shifted, max_pole as usize + poly_degree);
    PoleFit {
        min_order: -(max_pole as i32),
        coeffs,
    }
}

/// Log–log slope fit of |y| against x over the sampled grid, for reading off
/// integer pole orders. Slope −p means y ~ x^{−p}.
#[derive(Debug, Clone, Copy)]
pub struct SlopeFit<R: Real> {
    pub raw_slope: R,
    /// Nearest integer to the raw slope.
    pub rounded: i32,
}

/// Fits the log–log slope; values indistinguishable from zero are treated as
/// a flat (slope 0) sequence since they carry no pole.
pub fn log_log_slope<R: Real>(xs: &[R], ys: &[R]) -> SlopeFit<R> {
    assert_eq!(xs.len(), ys.len());
    let ymax = ys
        .iter()
        .map(|y| y.abs())
        .fold(R::zero(), |a, b| a.max(b));
    let floor = ymax * R::of(1e-13) + R::min_positive_value();
    let pts: Vec<(R, R)> = xs
        .iter()
        .zip(ys)
        .filter(|(_, y)| y.abs() > floor)
        .map(|(&x, &y)| (x.ln(), y.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return SlopeFit {
            raw_slope: R::zero(),
            rounded: 0,
        };
    }
    let n = R::of(pts.len() as f64);
    let mx = pts.iter().map(|p| p.0).sum::<R>() / n;
    let my = pts.iter().map(|p| p.1).sum::<R>() / n;
    let mut num = R::zero();
    let mut den = R::zero();
    for (x, y) in &pts {
        num += (*x - mx) * (*y - my);
        den += (*x - mx) * (*x - mx);
    }
    let raw = num / den;
    SlopeFit {
        raw_slope: raw,
        rounded: raw.round().to_f64().unwrap() as i32,
    }
}

/// Geometric grid of `points` values from `lo` to `hi` inclusive, ascending.
pub fn geometric_grid<R: Real>(lo: R, hi: R, points: usize) -> Vec<R> {
    assert!(points >= 2 && lo > R::zero() && hi > lo);
    let ratio = (hi / lo).powf(R::one() / R::of((points - 1) as f64));
    let mut out: Vec<R> = (0..points).map(|k| lo * ratio.powi(k as i32)).collect();
    // Pin the endpoints exactly.
    out[0] = lo;
    out[points - 1] = hi;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_polynomial_coefficients() {
        let xs: Vec<f64> = (0..13).map(|k| 1e-2 / 2f64.powi(k)).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| 0.5 - 2.0 * x * x + 3.0 * x).collect();
        let c = poly_fit(&xs, &ys, 4);
        assert!((c[0] - 0.5).abs() < 1e-12);
        assert!((c[1] - 3.0).abs() < 1e-9);
        assert!((c[2] + 2.0).abs() < 1e-6);
        assert!(c[3].abs() < 1e-3 && c[4].abs() < 1.0);
    }

    #[test]
    fn pole_fit_reads_off_laurent_coefficients() {
        let xs: Vec<f64> = geometric_grid(1e-3, 1e-2, 15);
        let ys: Vec<f64> = xs.iter().map(|&x| 3.0 / (x * x) - 1.5 / x + 7.0 + x).collect();
        let fit = pole_fit(&xs, &ys, 2, 2);
        assert!((fit.coeff(-2) - 3.0).abs() < 1e-8);
        assert!((fit.coeff(-1) + 1.5).abs() < 1e-5);
        assert!((fit.coeff(0) - 7.0).abs() < 1e-2);
    }

    #[test]
    fn slope_detects_pole_order() {
        let xs: Vec<f64> = geometric_grid(1e-4, 1e-2, 9);
        let ys: Vec<f64> = xs.iter().map(|&x| 0.25 / x + 3.0).collect();
        let fit = log_log_slope(&xs, &ys);
        assert_eq!(fit.rounded, -1);
        let flat: Vec<f64> = xs.iter().map(|_| 0.0).collect();
        assert_eq!(log_log_slope(&xs, &flat).rounded, 0);
    }

    #[test]
    fn grid_endpoints_exact() {
        let g = geometric_grid(1e-4, 1e-2, 21);
        assert_eq!(g.len(), 21);
        assert_eq!(g[0], 1e-4);
        assert_eq!(g[20], 1e-2);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}
