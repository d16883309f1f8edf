//! Calibration toolkit for generalized quantum measurements.
//!
//! Detector outcomes are assigned real contextual values so that a POVM
//! reproduces an observable exactly; conditioned averages built from those
//! values are swept in the coupling strength `g`, their weak limit is
//! extrapolated numerically, and the sufficiency conditions under which the
//! limit equals the generalized weak value are audited.
//!
//! ```
//! use ctxvals_core::cvsolve::{build_f, solve_pinv};
//! use ctxvals_core::scenario;
//! use ctxvals_core::weaklimit::{weak_limit, CvMethod, GridSpec};
//!
//! // Redundant three-outcome qubit detector measuring diag(1, -1).
//! let s = scenario::ce1::<f64>(1.0, -1.0);
//!
//! // Minimum-norm contextual values at finite coupling: (1/2g, -1/2g, 0).
//! let cal = build_f(&s.observable, &s.context, 0.1).unwrap();
//! let cv = solve_pinv(&cal);
//! assert!((cv.alphas[0] - 5.0).abs() < 1e-10);
//!
//! // The conditioned average converges to the generalized weak value.
//! let est = weak_limit(
//!     &s.context,
//!     &s.observable,
//!     &CvMethod::Pseudoinverse,
//!     &s.state,
//!     &s.post,
//!     &GridSpec::default(),
//! )
//! .unwrap();
//! assert!(est.convergence_flag && est.discrepancy < 1e-6);
//! ```

pub mod cvsolve;
pub mod error;
pub mod fitting;
pub mod gexpr;
pub mod matcore;
pub mod measurement;
pub mod scalar;
pub mod weaklimit;
pub mod scenario;
pub mod tol;

pub use error::{Error, Result};
pub use scalar::{Real, C};

/// Concrete `f64` aliases for the main types.
pub type CMatrix64 = matcore::CMatrix<f64>;
pub type RMatrix64 = matcore::RMatrix<f64>;
pub type GExpr64 = gexpr::GExpr<f64>;
pub type GMatrixFn64 = gexpr::GMatrixFn<f64>;
pub type Observable64 = measurement::Observable<f64>;
pub type State64 = measurement::State<f64>;
pub type PostSelection64 = measurement::PostSelection<f64>;
pub type MeasurementContext64 = measurement::MeasurementContext<f64>;
pub type CalibrationMatrix64 = cvsolve::CalibrationMatrix<f64>;
pub type ContextualValues64 = cvsolve::ContextualValues<f64>;
pub type Scenario64 = scenario::Scenario<f64>;

/// Single-precision aliases. The default tolerances target double
/// precision; `f32` users should pass their own thresholds where one is
/// configurable.
pub type CMatrix32 = matcore::CMatrix<f32>;
pub type RMatrix32 = matcore::RMatrix<f32>;
pub type GExpr32 = gexpr::GExpr<f32>;
pub type Observable32 = measurement::Observable<f32>;

#[cfg(test)]
mod f32_smoke {
    //! The generic core only type-checks at instantiation, so exercise the
    //! single-precision path end to end once.

    #[test]
    fn single_precision_pipeline_runs() {
        let s = crate::scenario::ce1::<f32>(1.0, -1.0);
        let cal = crate::cvsolve::build_f(&s.observable, &s.context, 0.1).unwrap();
        let cv = crate::cvsolve::solve_pinv(&cal);
        assert!((cv.alphas[0] - 5.0).abs() < 1e-4);
        assert!((cv.alphas[1] + 5.0).abs() < 1e-4);
        let wv =
            crate::weaklimit::generalized_weak_value(&s.observable, &s.state, &s.post).unwrap();
        assert!((wv.value - 1.0 / 3.0).abs() < 1e-5);
        let series = crate::gexpr::taylor_coeffs(&s.context.operators()[2], 2).unwrap();
        assert!((series.coeffs[0][(0, 0)].re - 0.5f32.sqrt()).abs() < 1e-5);
    }
}
