//! Default numeric tolerances.
//!
//! The stated constants target double precision. Each threshold also floors
//! at a small multiple of the active scalar's machine epsilon, which leaves
//! `f64` behavior untouched (the floors sit orders of magnitude below every
//! constant) while keeping an `f32` instantiation usable.

use crate::scalar::Real;

fn with_eps_floor<R: Real>(value: f64, eps_multiple: f64) -> R {
    R::of(value).max(R::epsilon() * R::of(eps_multiple))
}

/// Relative Hermiticity tolerance: ‖m − m†‖F ≤ tol · ‖m‖F.
pub fn hermiticity<R: Real>() -> R {
    with_eps_floor(1e-10, 50.0)
}

/// Relative floor for negative eigenvalues of nominally PSD matrices.
pub fn positivity<R: Real>() -> R {
    with_eps_floor(1e-8, 100.0)
}

/// Relative threshold merging near-degenerate eigenvalues into one eigenspace.
pub fn eigen_merge<R: Real>() -> R {
    with_eps_floor(1e-9, 10.0)
}

/// Absolute POVM completeness tolerance on ‖Σ_j E_j − 1‖F.
pub fn povm_completeness<R: Real>() -> R {
    with_eps_floor(1e-9, 100.0)
}

/// Density-matrix validity tolerance (trace, Hermiticity, positivity).
pub fn state<R: Real>() -> R {
    with_eps_floor(1e-10, 100.0)
}

/// Relative observable/context compatibility tolerance on commutator norms.
pub fn compatibility<R: Real>() -> R {
    with_eps_floor(1e-10, 50.0)
}

/// Absolute denominator tolerance for conditioned averages: a near-zero
/// guard, deliberately not epsilon-floored.
pub fn denominator<R: Real>() -> R {
    R::of(1e-14)
}

/// Residual tolerance declaring the calibration identity satisfied:
/// ‖Fα − a‖ ≤ tol · (1 + ‖a‖).
pub fn solve_residual<R: Real>() -> R {
    with_eps_floor(1e-9, 100.0)
}

/// Relative threshold below which a component of Uᵀa counts as zero.
pub fn relevant_component<R: Real>() -> R {
    with_eps_floor(1e-10, 100.0)
}

/// Relative held-out residual above which a Taylor fit is rejected.
pub fn taylor_fit<R: Real>() -> R {
    with_eps_floor(1e-6, 1000.0)
}

/// Default rank threshold for singular values: σ counts as zero when
/// σ < max(rows, cols) · ε · σ_max.
pub fn rank_threshold<R: Real>(max_dim: usize, sigma_max: R) -> R {
    R::of(max_dim as f64) * R::epsilon() * sigma_max
}

#[cfg(test)]
mod tests {
    #[test]
    fn f64_values_are_the_stated_constants() {
        assert_eq!(super::hermiticity::<f64>(), 1e-10);
        assert_eq!(super::positivity::<f64>(), 1e-8);
        assert_eq!(super::eigen_merge::<f64>(), 1e-9);
        assert_eq!(super::povm_completeness::<f64>(), 1e-9);
        assert_eq!(super::state::<f64>(), 1e-10);
        assert_eq!(super::compatibility::<f64>(), 1e-10);
        assert_eq!(super::denominator::<f64>(), 1e-14);
        assert_eq!(super::solve_residual::<f64>(), 1e-9);
        assert_eq!(super::relevant_component::<f64>(), 1e-10);
        assert_eq!(super::taylor_fit::<f64>(), 1e-6);
    }

    #[test]
    fn f32_floors_clear_machine_epsilon() {
        assert!(super::povm_completeness::<f32>() > f32::EPSILON);
        assert!(super::state::<f32>() > f32::EPSILON);
        assert!(super::solve_residual::<f32>() > f32::EPSILON);
    }
}
