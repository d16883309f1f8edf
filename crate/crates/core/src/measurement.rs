//! The quantum measurement model: observables with cached spectra, states,
//! measurement contexts, POVMs, outcome statistics and the generalized
//! conditioned average.

use crate::cvsolve::ContextualValues;
use crate::error::{Error, Result};
use crate::gexpr::{GMatrixFn, GRange};
use crate::matcore::{
    check_psd, commutator, min_eigenvalue, spectral_decompose, CMatrix, EigenSpace,
};
use crate::scalar::Real;
use crate::tol;

/// Hermitian observable with its merged spectral decomposition.
#[derive(Debug, Clone)]
pub struct Observable<R: Real> {
    matrix: CMatrix<R>,
    spectrum: Vec<EigenSpace<R>>,
}

impl<R: Real> Observable<R> {
    pub fn new(matrix: CMatrix<R>) -> Result<Self> {
        let spectrum = spectral_decompose(&matrix)?;
        Ok(Self { matrix, spectrum })
    }

    pub fn diagonal(values: &[R]) -> Self {
        Self::new(CMatrix::diag_real(values)).expect("diagonal matrices are Hermitian")
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &CMatrix<R> {
        &self.matrix
    }

    /// Eigenspaces with distinct eigenvalues, descending.
    pub fn spectrum(&self) -> &[EigenSpace<R>] {
        &self.spectrum
    }

    pub fn eigenvalues(&self) -> Vec<R> {
        self.spectrum.iter().map(|s| s.value).collect()
    }
}

/// Density matrix.
#[derive(Debug, Clone)]
pub struct State<R: Real> {
    rho: CMatrix<R>,
}

impl<R: Real> State<R> {
    pub fn new(rho: CMatrix<R>) -> Result<Self> {
        let t = tol::state::<R>();
        let defect = rho.hermitian_defect();
        if defect > t * rho.fro_norm().max(R::one()) {
            return Err(Error::InvalidState {
                reason: format!("Hermiticity defect {:e}", defect.to_f64().unwrap_or(f64::NAN)),
            });
        }
        let trace = rho.trace();
        if (trace.re - R::one()).abs() > t || trace.im.abs() > t {
            return Err(Error::InvalidState {
                reason: format!("trace {} + {}i instead of 1", trace.re, trace.im),
            });
        }
        let min = min_eigenvalue(&rho.hermitian_part());
        if min < -t {
            return Err(Error::InvalidState {
                reason: format!("negative eigenvalue {:e}", min.to_f64().unwrap_or(f64::NAN)),
            });
        }
        Ok(Self { rho })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            rho: CMatrix::identity(dim).scale_re(R::one() / R::of(dim as f64)),
        }
    }

    /// |ψ⟩⟨ψ| from a (normalized on entry) state vector.
    pub fn pure(psi: &[crate::scalar::C<R>]) -> Result<Self> {
        let norm_sq: R = psi.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sq - R::one()).abs() > tol::state::<R>() * R::of(100.0) {
            return Err(Error::InvalidState {
                reason: format!("state vector norm² = {norm_sq}"),
            });
        }
        Self::new(CMatrix::outer(psi, psi))
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    pub fn rho(&self) -> &CMatrix<R> {
        &self.rho
    }
}

/// Post-selection described by the effect (probability operator) of the
/// second measurement's outcome.
#[derive(Debug, Clone)]
pub struct PostSelection<R: Real> {
    effect: CMatrix<R>,
}

impl<R: Real> PostSelection<R> {
    pub fn new(effect: CMatrix<R>) -> Result<Self> {
        effect.check_hermitian().map_err(|e| Error::InvalidEffect {
            reason: e.to_string(),
        })?;
        check_psd(&effect).map_err(|e| Error::InvalidEffect {
            reason: e.to_string(),
        })?;
        let eig_max = crate::matcore::hermitian_eigen(&effect).values[0];
        if eig_max > R::one() + tol::state::<R>() {
            return Err(Error::InvalidEffect {
                reason: format!("eigenvalue {eig_max} exceeds 1"),
            });
        }
        Ok(Self { effect })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            effect: CMatrix::identity(dim),
        }
    }

    /// Rank-1 effect |ψ⟩⟨ψ|.
    pub fn from_vector(psi: &[crate::scalar::C<R>]) -> Result<Self> {
        let norm_sq: R = psi.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sq - R::one()).abs() > tol::state::<R>() * R::of(100.0) {
            return Err(Error::InvalidEffect {
                reason: format!("post-selection vector norm² = {norm_sq}"),
            });
        }
        Self::new(CMatrix::outer(psi, psi))
    }

    pub fn effect(&self) -> &CMatrix<R> {
        &self.effect
    }

    pub fn dim(&self) -> usize {
        self.effect.dim()
    }
}

/// Family of measurement operators M_j(g) with outcome labels. POVM
/// completeness Σ_j M_j†M_j = 1 is enforced on a 16-point sample of the
/// validity interval at construction.
#[derive(Debug, Clone)]
pub struct MeasurementContext<R: Real> {
    operators: Vec<GMatrixFn<R>>,
    outcome_labels: Vec<String>,
}

const VALIDITY_SAMPLE_POINTS: usize = 16;

impl<R: Real> MeasurementContext<R> {
    pub fn new(operators: Vec<GMatrixFn<R>>, outcome_labels: Vec<String>) -> Result<Self> {
        if operators.is_empty() {
            return Err(Error::Invalid("context needs at least one outcome".into()));
        }
        if outcome_labels.len() != operators.len() {
            return Err(Error::Invalid(format!(
                "{} labels for {} outcomes",
                outcome_labels.len(),
                operators.len()
            )));
        }
        let dim = operators[0].dim();
        let validity = operators[0].validity();
        for op in &operators {
            if op.dim() != dim {
                return Err(Error::DimMismatch {
                    left: format!("{dim}"),
                    right: format!("{}", op.dim()),
                });
            }
            if op.validity() != validity {
                return Err(Error::Invalid(
                    "all operators must share one validity interval".into(),
                ));
            }
        }
        let ctx = Self {
            operators,
            outcome_labels,
        };
        for g in validity.sample(VALIDITY_SAMPLE_POINTS) {
            ctx.povm_at(g)?;
        }
        Ok(ctx)
    }

    pub fn dim(&self) -> usize {
        self.operators[0].dim()
    }

    pub fn outcome_count(&self) -> usize {
        self.operators.len()
    }

    pub fn validity(&self) -> GRange<R> {
        self.operators[0].validity()
    }

    pub fn operators(&self) -> &[GMatrixFn<R>] {
        &self.operators
    }

    pub fn labels(&self) -> &[String] {
        &self.outcome_labels
    }

    pub fn operator_at(&self, j: usize, g: R) -> Result<CMatrix<R>> {
        self.operators[j].eval_at(g)
    }

    pub fn is_g_independent(&self) -> bool {
        self.operators.iter().all(|m| m.is_g_independent())
    }

    /// POVM elements E_j = M_j†M_j at the given coupling; errors when the
    /// elements fail to partition unity within tolerance.
    pub fn povm_at(&self, g: R) -> Result<Vec<CMatrix<R>>> {
        let povm: Vec<CMatrix<R>> = self
            .operators
            .iter()
            .map(|m| m.eval_at(g).map(|mat| mat.adjoint().mul_mat(&mat)))
            .collect::<Result<_>>()?;
        let mut sum = CMatrix::zeros(self.dim());
        for e in &povm {
            sum = &sum + e;
        }
        let defect = (&sum - &CMatrix::identity(self.dim())).fro_norm();
        if defect > tol::povm_completeness::<R>() {
            return Err(Error::PovmIncomplete {
                defect: defect.to_f64().unwrap_or(f64::NAN),
                tol: tol::povm_completeness::<R>().to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(povm)
    }
}

/// P(j) = tr(ρ E_j) for every outcome. Sub-roundoff negatives are clamped.
pub fn outcome_probs<R: Real>(
    ctx: &MeasurementContext<R>,
    g: R,
    state: &State<R>,
) -> Result<Vec<R>> {
    let povm = ctx.povm_at(g)?;
    Ok(povm
        .iter()
        .map(|e| state.rho().trace_product_re(e).max(R::zero()))
        .collect())
}

/// ρ_j = M_j ρ M_j† / P(j); outcomes with vanishing probability are errors.
pub fn state_update<R: Real>(
    ctx: &MeasurementContext<R>,
    g: R,
    state: &State<R>,
    outcome: usize,
) -> Result<State<R>> {
    let m = ctx.operator_at(outcome, g)?;
    let updated = m.mul_mat(state.rho()).mul_mat(&m.adjoint());
    let prob = updated.trace().re;
    if prob <= tol::denominator::<R>() {
        return Err(Error::ImpossibleOutcome {
            outcome,
            prob: prob.to_f64().unwrap_or(f64::NAN),
        });
    }
    State::new(updated.scale_re(R::one() / prob))
}

/// ⟨A⟩ = tr(ρ A).
pub fn expectation<R: Real>(obs: &Observable<R>, state: &State<R>) -> R {
    state.rho().trace_product(obs.matrix()).re
}

/// Verifies [A, M_j(g)] ≈ 0 for every outcome, the compatibility needed for
/// the moment formula.
pub fn check_full_compatibility<R: Real>(
    obs: &Observable<R>,
    ctx: &MeasurementContext<R>,
    g: R,
) -> Result<()> {
    let mut worst = R::zero();
    let mut detail = String::new();
    for (j, op) in ctx.operators().iter().enumerate() {
        let m = op.eval_at(g)?;
        let comm = commutator(obs.matrix(), &m)?.fro_norm();
        let bound = tol::compatibility::<R>() * obs.matrix().fro_norm() * m.fro_norm();
        if comm > bound && comm > worst {
            worst = comm;
            detail = format!("‖[A, M_{}]‖ = {:e}", j + 1, comm.to_f64().unwrap_or(f64::NAN));
        }
    }
    if worst > R::zero() {
        return Err(Error::Incompatible {
            worst: worst.to_f64().unwrap_or(f64::NAN),
            detail,
        });
    }
    Ok(())
}

const MOMENT_MAX_POWER: usize = 4;
const MOMENT_MAX_OUTCOMES: usize = 8;

/// n-th statistical moment from correlated measurement sequences:
/// Σ_{j₁…jₙ} α_{j₁}…α_{jₙ} tr(ρ E_{j₁}…E_{jₙ}), the full multi-index sum.
///
/// Requires a fully compatible context ([A, M_j] = 0 for all j).
pub fn cv_moment<R: Real>(
    obs: &Observable<R>,
    ctx: &MeasurementContext<R>,
    g: R,
    cv: &ContextualValues<R>,
    state: &State<R>,
    n: usize,
) -> Result<R> {
    if n == 0 || n > MOMENT_MAX_POWER {
        return Err(Error::Invalid(format!(
            "moment power must be in 1..={MOMENT_MAX_POWER}, got {n}"
        )));
    }
    if ctx.outcome_count() > MOMENT_MAX_OUTCOMES {
        return Err(Error::Invalid(format!(
            "moment sum capped at {MOMENT_MAX_OUTCOMES} outcomes"
        )));
    }
    if cv.alphas.len() != ctx.outcome_count() {
        return Err(Error::Invalid(
            "contextual-value count does not match outcome count".into(),
        ));
    }
    check_full_compatibility(obs, ctx, g)?;
    let povm = ctx.povm_at(g)?;

    // Depth-first over outcome strings, reusing the running product ρ·E_{j₁}…
    fn walk<R: Real>(
        povm: &[CMatrix<R>],
        alphas: &[R],
        depth: usize,
        prefix: &CMatrix<R>,
        weight: R,
        acc: &mut R,
    ) {
        if depth == 0 {
            *acc += weight * prefix.trace().re;
            return;
        }
        for (e, &alpha) in povm.iter().zip(alphas) {
            let next = prefix.mul_mat(e);
            walk(povm, alphas, depth - 1, &next, weight * alpha, acc);
        }
    }

    let mut acc = R::zero();
    walk(
        &povm,
        &cv.alphas,
        n,
        state.rho(),
        R::one(),
        &mut acc,
    );
    Ok(acc)
}

/// Conditioned average of the contextual values given a post-selection, with
/// the full probability table.
#[derive(Debug, Clone)]
pub struct ConditionedAverageResult<R: Real> {
    pub g: R,
    pub value: R,
    /// P(j | f), normalized.
    pub cond_probs: Vec<R>,
    /// tr(E_f M_j ρ M_j†) before normalization.
    pub joint_unnormalized: Vec<R>,
    /// Σ_j tr(E_f M_j ρ M_j†), the denominator.
    pub post_prob: R,
}

/// Post-selected conditioned average Σ_j α_j P(j|f) with
/// P(j|f) = tr(E_f M_j ρ M_j†) / Σ_j tr(E_f M_j ρ M_j†).
pub fn conditioned_average<R: Real>(
    ctx: &MeasurementContext<R>,
    g: R,
    cv: &ContextualValues<R>,
    state: &State<R>,
    post: &PostSelection<R>,
) -> Result<ConditionedAverageResult<R>> {
    if cv.alphas.len() != ctx.outcome_count() {
        return Err(Error::Invalid(
            "contextual-value count does not match outcome count".into(),
        ));
    }
    let mut joint = Vec::with_capacity(ctx.outcome_count());
    for op in ctx.operators() {
        let m = op.eval_at(g)?;
        let updated = m.mul_mat(state.rho()).mul_mat(&m.adjoint());
        joint.push(post.effect().trace_product_re(&updated).max(R::zero()));
    }
    let post_prob: R = joint.iter().copied().sum();
    if post_prob <= tol::denominator::<R>() {
        return Err(Error::NullPostSelection {
            denominator: post_prob.to_f64().unwrap_or(f64::NAN),
        });
    }
    let cond_probs: Vec<R> = joint.iter().map(|&p| p / post_prob).collect();
    let value = cv
        .alphas
        .iter()
        .zip(&cond_probs)
        .map(|(&a, &p)| a * p)
        .sum();
    Ok(ConditionedAverageResult {
        g,
        value,
        cond_probs,
        joint_unnormalized: joint,
        post_prob,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cvsolve::SolutionMethod;
    use crate::scalar::cx;

    fn ce1_context() -> MeasurementContext<f64> {
        let validity = GRange::up_to(0.5);
        let ops = vec![
            GMatrixFn::parse_entries(2, &["1/2 + g", "0", "0", "1/2 - g"], validity).unwrap(),
            GMatrixFn::parse_entries(2, &["1/2 - g", "0", "0", "1/2 + g"], validity).unwrap(),
            GMatrixFn::parse_entries(
                2,
                &["sqrt(1/2 - 2*g^2)", "0", "0", "sqrt(1/2 - 2*g^2)"],
                validity,
            )
            .unwrap(),
        ];
        MeasurementContext::new(ops, vec!["m1".into(), "m2".into(), "m3".into()]).unwrap()
    }

    fn cv(alphas: Vec<f64>, g: f64) -> ContextualValues<f64> {
        ContextualValues {
            alphas,
            method: SolutionMethod::Pseudoinverse,
            residual: 0.0,
            g,
        }
    }

    fn plus_state() -> State<f64> {
        State::pure(&[cx(std::f64::consts::FRAC_1_SQRT_2); 2]).unwrap()
    }

    #[test]
    fn povm_at_paper_values() {
        let ctx = ce1_context();
        let povm = ctx.povm_at(0.1).unwrap();
        assert!(povm[0].approx_eq(&CMatrix::from_real_f64(2, &[0.36, 0.0, 0.0, 0.16]), 1e-14));
        assert!(povm[1].approx_eq(&CMatrix::from_real_f64(2, &[0.16, 0.0, 0.0, 0.36]), 1e-14));
        assert!(povm[2].approx_eq(&CMatrix::identity(2).scale_re(0.48), 1e-14));
        // g = 0 limit.
        let povm0 = ctx.povm_at(0.0).unwrap();
        assert!(povm0[0].approx_eq(&CMatrix::identity(2).scale_re(0.25), 1e-14));
        assert!(povm0[2].approx_eq(&CMatrix::identity(2).scale_re(0.5), 1e-14));
    }

    #[test]
    fn completeness_violation_is_rejected() {
        let validity = GRange::up_to(0.4);
        let ops = vec![
            GMatrixFn::parse_entries(2, &["1/2 + g", "0", "0", "1/2 - g"], validity).unwrap(),
            GMatrixFn::parse_entries(2, &["1/2 - g", "0", "0", "1/2 + g"], validity).unwrap(),
            // Missing square root: 1/2 − 2g² instead of √(1/2 − 2g²).
            GMatrixFn::parse_entries(2, &["1/2 - 2*g^2", "0", "0", "1/2 - 2*g^2"], validity)
                .unwrap(),
        ];
        let err = MeasurementContext::new(ops, vec!["a".into(), "b".into(), "c".into()])
            .unwrap_err();
        assert!(matches!(err, Error::PovmIncomplete { .. }));
    }

    #[test]
    fn outcome_probs_examples() {
        let ctx = ce1_context();
        let mixed = State::maximally_mixed(2);
        let p = outcome_probs(&ctx, 0.1, &mixed).unwrap();
        assert!((p[0] - 0.26).abs() < 1e-14);
        assert!((p[1] - 0.26).abs() < 1e-14);
        assert!((p[2] - 0.48).abs() < 1e-14);

        let ground = State::new(CMatrix::from_real_f64(2, &[1.0, 0.0, 0.0, 0.0])).unwrap();
        let p = outcome_probs(&ctx, 0.1, &ground).unwrap();
        assert!((p[0] - 0.36).abs() < 1e-14);
        assert!((p[1] - 0.16).abs() < 1e-14);
        assert!((p[2] - 0.48).abs() < 1e-14);

        // Any state at g = 0: {¼, ¼, ½}.
        let p = outcome_probs(&ctx, 0.0, &plus_state()).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-14 && (p[2] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn state_update_variants() {
        let ctx = ce1_context();
        // Diagonal state stays diagonal under the diagonal context.
        let rho = State::new(CMatrix::from_real_f64(2, &[0.7, 0.0, 0.0, 0.3])).unwrap();
        let updated = state_update(&ctx, 0.1, &rho, 0).unwrap();
        assert!(updated.rho()[(0, 1)].norm() < 1e-15);
        let p0 = 0.36 * 0.7 + 0.16 * 0.3;
        assert!((updated.rho()[(0, 0)].re - 0.36 * 0.7 / p0).abs() < 1e-12);

        // Pure state stays rank one.
        let updated = state_update(&ctx, 0.1, &plus_state(), 0).unwrap();
        let eig = crate::matcore::hermitian_eigen(updated.rho());
        assert!(eig.values[0] > 1.0 - 1e-12 && eig.values[1].abs() < 1e-12);
    }

    #[test]
    fn expectation_examples() {
        let z = Observable::diagonal(&[1.0, -1.0]);
        let p = 0.8;
        let rho = State::new(CMatrix::from_real_f64(2, &[p, 0.0, 0.0, 1.0 - p])).unwrap();
        assert!((expectation(&z, &rho) - (2.0 * p - 1.0)).abs() < 1e-14);
        let id = Observable::new(CMatrix::identity(2)).unwrap();
        assert!((expectation(&id, &rho) - 1.0).abs() < 1e-14);
        assert!(expectation(&z, &plus_state()).abs() < 1e-14);
    }

    #[test]
    fn moment_reduces_to_observable_power() {
        // Pseudoinverse contextual values for a = 1, b = −1 at g = 0.1 are
        // (5, −5, 0); A² = 1 forces the second moment to 1 exactly.
        let ctx = ce1_context();
        let obs = Observable::<f64>::diagonal(&[1.0, -1.0]);
        let rho = State::new(CMatrix::from_real_f64(2, &[0.7, 0.0, 0.0, 0.3])).unwrap();
        let cv = cv(vec![5.0, -5.0, 0.0], 0.1);
        let m2 = cv_moment(&obs, &ctx, 0.1, &cv, &rho, 2).unwrap();
        assert!((m2 - 1.0).abs() < 1e-10);
        let m1 = cv_moment(&obs, &ctx, 0.1, &cv, &rho, 1).unwrap();
        assert!((m1 - expectation(&obs, &rho)).abs() < 1e-10);
    }

    #[test]
    fn projective_update_follows_lueders_rule() {
        let obs = Observable::<f64>::diagonal(&[1.0, -1.0]);
        let ctx = crate::scenario::projective_context(&obs).unwrap();
        let rho = State::new(CMatrix::from_real_f64(2, &[0.6, 0.2, 0.2, 0.4])).unwrap();
        let updated = state_update(&ctx, 0.1, &rho, 0).unwrap();
        // Π₀ρΠ₀/P(0) projects onto the first slot.
        assert!(updated
            .rho()
            .approx_eq(&CMatrix::from_real_f64(2, &[1.0, 0.0, 0.0, 0.0]), 1e-12));
    }

    #[test]
    fn projective_moments_are_eigenvalue_powers() {
        // CVs of a projective context are the eigenvalues themselves, and
        // every moment reduces to Σ_k a_kⁿ P(k).
        let obs = Observable::diagonal(&[2.0, -1.0]);
        let ctx = crate::scenario::projective_context(&obs).unwrap();
        let rho = State::new(CMatrix::from_real_f64(2, &[0.3, 0.1, 0.1, 0.7])).unwrap();
        let cv = cv(vec![2.0, -1.0], 0.1);
        let probs = outcome_probs(&ctx, 0.1, &rho).unwrap();
        for n in 1..=4usize {
            let moment = cv_moment(&obs, &ctx, 0.1, &cv, &rho, n).unwrap();
            let direct: f64 = probs
                .iter()
                .zip([2.0f64, -1.0])
                .map(|(&p, a)| a.powi(n as i32) * p)
                .sum();
            assert!((moment - direct).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn moment_rejects_incompatible_context() {
        let ctx = ce1_context();
        let obs = Observable::new(CMatrix::from_real_f64(2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        let rho = State::maximally_mixed(2);
        let cv = cv(vec![1.0, 1.0, 1.0], 0.1);
        assert!(matches!(
            cv_moment(&obs, &ctx, 0.1, &cv, &rho, 2),
            Err(Error::Incompatible { .. })
        ));
    }

    #[test]
    fn identity_post_selection_collapses_to_expectation() {
        let ctx = ce1_context();
        let g = 0.07;
        let rho = plus_state();
        let cv = cv(vec![1.0 / (2.0 * g), -1.0 / (2.0 * g), 0.0], g);
        let obs = Observable::diagonal(&[1.0, -1.0]);
        let res =
            conditioned_average(&ctx, g, &cv, &rho, &PostSelection::identity(2)).unwrap();
        assert!((res.value - expectation(&obs, &rho)).abs() < 1e-12);
        assert!((res.post_prob - 1.0).abs() < 1e-12);
        let sum: f64 = res.cond_probs.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weak_value_emerges_at_small_coupling() {
        // tan θ = 1/2 post-selection on |+⟩: the conditioned average at
        // g = 1e-3 sits within 1e-5 of the weak-value prediction 1/3.
        let ctx = ce1_context();
        let g = 1e-3;
        let cv = cv(vec![1.0 / (2.0 * g), -1.0 / (2.0 * g), 0.0], g);
        let sqrt5 = 5.0f64.sqrt();
        let post = PostSelection::from_vector(&[cx(2.0 / sqrt5), cx(1.0 / sqrt5)]).unwrap();
        let res = conditioned_average(&ctx, g, &cv, &plus_state(), &post).unwrap();
        assert!((res.value - 1.0 / 3.0).abs() < 1e-5, "value {}", res.value);
    }

    #[test]
    fn orthogonal_post_selection_is_an_error() {
        let ctx = ce1_context();
        let minus = State::pure(&[
            cx(std::f64::consts::FRAC_1_SQRT_2),
            cx(-std::f64::consts::FRAC_1_SQRT_2),
        ])
        .unwrap();
        let post = PostSelection::from_vector(&[
            cx(std::f64::consts::FRAC_1_SQRT_2),
            cx(std::f64::consts::FRAC_1_SQRT_2),
        ])
        .unwrap();
        // The context is diagonal so M_j|−⟩ keeps zero overlap with |+⟩ only
        // at g = 0, where probabilities vanish identically.
        let cv = cv(vec![1.0, -1.0, 0.0], 0.0);
        assert!(matches!(
            conditioned_average(&ctx, 0.0, &cv, &minus, &post),
            Err(Error::NullPostSelection { .. })
        ));
    }

    #[test]
    fn projective_context_gives_abl_style_conditioning() {
        // Projective σ_z context, |+⟩ preparation, tan θ = 1/2 post-selection:
        // P(k|f) ∝ |⟨ψf|k⟩|²·|⟨k|+⟩|² gives the conditional mean 0.6.
        let validity = GRange::up_to(0.5);
        let ops = vec![
            GMatrixFn::parse_entries(2, &["1", "0", "0", "0"], validity).unwrap(),
            GMatrixFn::parse_entries(2, &["0", "0", "0", "1"], validity).unwrap(),
        ];
        let ctx = MeasurementContext::new(ops, vec!["up".into(), "down".into()]).unwrap();
        let sqrt5 = 5.0f64.sqrt();
        let post = PostSelection::from_vector(&[cx(2.0 / sqrt5), cx(1.0 / sqrt5)]).unwrap();
        let cv = cv(vec![1.0, -1.0], 0.1);
        let res = conditioned_average(&ctx, 0.1, &cv, &plus_state(), &post).unwrap();
        assert!((res.value - 0.6).abs() < 1e-12);
    }
}
