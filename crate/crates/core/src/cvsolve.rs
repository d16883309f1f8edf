//! Calibration of detector outcomes against an observable: assembly of the
//! calibration matrix F, contextual-value solvers (pseudoinverse, pinned,
//! exact), null spaces, detector-variance bounds and the minimal-order
//! solvability analysis.

use crate::error::{Error, Result};
use crate::fitting::{log_log_slope, pole_fit, SlopeFit};
use crate::gexpr::{default_taylor_anchor, taylor_fit_fn};
use crate::matcore::{commutator, hermitian_eigen, merge_eigenspaces, CMatrix, RMatrix, SvdResult};
use crate::measurement::{MeasurementContext, Observable};
use crate::scalar::{Real, C};
use crate::tol;

/// How a contextual-value vector was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionMethod {
    Pseudoinverse,
    FixedComponent,
    ExactInverse,
}

impl std::fmt::Display for SolutionMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolutionMethod::Pseudoinverse => write!(f, "pseudoinverse"),
            SolutionMethod::FixedComponent => write!(f, "fixed_component"),
            SolutionMethod::ExactInverse => write!(f, "exact_inverse"),
        }
    }
}

/// Real coefficients assigned to detector outcomes so that Σ_j α_j E_j
/// reproduces the observable.
#[derive(Debug, Clone)]
pub struct ContextualValues<R: Real> {
    pub alphas: Vec<R>,
    pub method: SolutionMethod,
    /// ‖Fα − a‖ of the normalized eigenvalue equations.
    pub residual: R,
    pub g: R,
}

impl<R: Real> ContextualValues<R> {
    /// ‖α‖², the upper bound on the detector variance.
    pub fn norm_sq(&self) -> R {
        self.alphas.iter().map(|&a| a * a).sum()
    }
}

/// One row of the calibration system: a joint eigenspace of the observable
/// and the POVM, its observable eigenvalue and its rank.
#[derive(Debug, Clone)]
pub struct JointSubspace<R: Real> {
    pub value: R,
    pub basis: Vec<Vec<C<R>>>,
}

impl<R: Real> JointSubspace<R> {
    pub fn rank(&self) -> usize {
        self.basis.len()
    }
}

/// The matrix equation a⃗ = F α⃗ with F_{kj} = tr(Π_k E_j), one row per joint
/// eigenspace of the observable and the POVM elements.
#[derive(Debug, Clone)]
pub struct CalibrationMatrix<R: Real> {
    /// Unnormalized traces tr(Π_k E_j); row k sums to rank(Π_k).
    pub f: RMatrix<R>,
    /// Target eigenvalue a_k per row.
    pub eigenvalue_vec: Vec<R>,
    /// rank(Π_k) per row.
    pub subspace_ranks: Vec<usize>,
    pub g: R,
}

impl<R: Real> CalibrationMatrix<R> {
    /// Rows divided by their subspace rank: the per-eigenspace scalar
    /// equations Σ_j α_j e_jk = a_k actually solved.
    pub fn normalized(&self) -> RMatrix<R> {
        let mut out = self.f.clone();
        for k in 0..out.rows() {
            let d = R::of(self.subspace_ranks[k] as f64);
            for j in 0..out.cols() {
                out[(k, j)] /= d;
            }
        }
        out
    }

    pub fn svd(&self) -> SvdResult<R> {
        crate::matcore::svd_real(&self.normalized())
    }

    /// ‖Fα − a‖ of the normalized system.
    pub fn residual(&self, alphas: &[R]) -> R {
        let fa = self.normalized().mul_vec(alphas);
        fa.iter()
            .zip(&self.eigenvalue_vec)
            .map(|(&x, &a)| (x - a) * (x - a))
            .sum::<R>()
            .sqrt()
    }

    /// Tolerance below which a residual counts as "identity satisfied".
    /// Solutions with huge components (deliberately divergent pins near
    /// g = 0) accumulate rounding residual proportional to ‖α‖, so the bound
    /// carries a backward-error term on top of the base threshold.
    pub fn residual_tol_for(&self, alphas: &[R]) -> R {
        let a_norm = self
            .eigenvalue_vec
            .iter()
            .map(|&a| a * a)
            .sum::<R>()
            .sqrt();
        let alpha_norm = alphas.iter().map(|&x| x * x).sum::<R>().sqrt();
        let f_norm = self.f.fro_norm().max(R::one());
        tol::solve_residual::<R>() * (R::one() + a_norm)
            + R::of(100.0) * R::epsilon() * f_norm * alpha_norm
    }
}

/// Verifies that the observable and every POVM element commute pairwise, so
/// that a joint eigenbasis exists.
fn check_commuting_family<R: Real>(obs: &Observable<R>, povm: &[CMatrix<R>]) -> Result<()> {
    let mut worst = R::zero();
    let mut detail = String::new();
    let a = obs.matrix();
    for (j, e) in povm.iter().enumerate() {
        let norm = commutator(a, e)?.fro_norm();
        let bound = tol::compatibility::<R>() * a.fro_norm() * e.fro_norm().max(R::epsilon());
        if norm > bound && norm > worst {
            worst = norm;
            detail = format!("‖[A, E_{}]‖ = {:e}", j + 1, norm.to_f64().unwrap_or(f64::NAN));
        }
    }
    for i in 0..povm.len() {
        for j in i + 1..povm.len() {
            let norm = commutator(&povm[i], &povm[j])?.fro_norm();
            let bound = tol::compatibility::<R>()
                * povm[i].fro_norm().max(R::epsilon())
                * povm[j].fro_norm().max(R::epsilon());
            if norm > bound && norm > worst {
                worst = norm;
                detail = format!(
                    "‖[E_{}, E_{}]‖ = {:e}",
                    i + 1,
                    j + 1,
                    norm.to_f64().unwrap_or(f64::NAN)
                );
            }
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

/// Splits the observable's eigenspaces until every POVM element acts as a
/// scalar on each subspace, giving the joint eigenbasis the rows of F live
/// on. Subspaces are ordered by the basis slot carrying their largest
/// projector weight, matching the slot order of diagonal presentations.
fn joint_subspaces<R: Real>(
    obs: &Observable<R>,
    povm: &[CMatrix<R>],
) -> Result<Vec<JointSubspace<R>>> {
    check_commuting_family(obs, povm)?;
    let dim = obs.dim();
    let mut spaces: Vec<JointSubspace<R>> = obs
        .spectrum()
        .iter()
        .map(|s| JointSubspace {
            value: s.value,
            basis: s.basis.clone(),
        })
        .collect();

    for e in povm {
        let mut refined = Vec::with_capacity(spaces.len());
        for space in &spaces {
            let d = space.rank();
            if d == 1 {
                refined.push(space.clone());
                continue;
            }
            // Restriction of E to the subspace.
            let mut block = CMatrix::zeros(d);
            for a in 0..d {
                for b in 0..d {
                    let eb = e.mul_vec(&space.basis[b]);
                    block[(a, b)] = (0..dim).map(|i| space.basis[a][i].conj() * eb[i]).sum();
                }
            }
            let eig = hermitian_eigen(&block);
            for cluster in merge_eigenspaces(&eig) {
                let basis = cluster
                    .basis
                    .iter()
                    .map(|coef| {
                        let mut v = vec![C::new(R::zero(), R::zero()); dim];
                        for (b, &c) in coef.iter().enumerate() {
                            for (vi, &bi) in v.iter_mut().zip(&space.basis[b]) {
                                *vi += bi * c;
                            }
                        }
                        v
                    })
                    .collect();
                refined.push(JointSubspace {
                    value: space.value,
                    basis,
                });
            }
        }
        spaces = refined;
    }

    // Deterministic row order: leading basis slot of each projector.
    let slot_of = |s: &JointSubspace<R>| -> usize {
        let mut best = (R::neg_infinity(), 0usize);
        for i in 0..dim {
            let w: R = s.basis.iter().map(|v| v[i].norm_sqr()).sum();
            if w > best.0 {
                best = (w, i);
            }
        }
        best.1
    };
    let mut keyed: Vec<(usize, JointSubspace<R>)> =
        spaces.into_iter().map(|s| (slot_of(&s), s)).collect();
    keyed.sort_by_key(|(slot, _)| *slot);
    Ok(keyed.into_iter().map(|(_, s)| s).collect())
}

/// Builds the calibration matrix from explicit POVM elements.
pub fn build_f_from_povm<R: Real>(
    obs: &Observable<R>,
    povm: &[CMatrix<R>],
    g: R,
) -> Result<CalibrationMatrix<R>> {
    let spaces = joint_subspaces(obs, povm)?;
    let rows = spaces.len();
    let cols = povm.len();
    let mut f = RMatrix::zeros(rows, cols);
    for (k, space) in spaces.iter().enumerate() {
        for (j, e) in povm.iter().enumerate() {
            f[(k, j)] = space.projector_trace(e);
        }
    }
    Ok(CalibrationMatrix {
        f,
        eigenvalue_vec: spaces.iter().map(|s| s.value).collect(),
        subspace_ranks: spaces.iter().map(|s| s.rank()).collect(),
        g,
    })
}

impl<R: Real> JointSubspace<R> {
    /// tr(Π E) for the subspace projector.
    fn projector_trace(&self, e: &CMatrix<R>) -> R {
        let dim = e.dim();
        let mut acc = R::zero();
        for v in &self.basis {
            let ev = e.mul_vec(v);
            let d: C<R> = (0..dim).map(|i| v[i].conj() * ev[i]).sum();
            acc += d.re;
        }
        acc
    }
}

/// Builds F_{kj} = tr(Π_k E_j) for a context at coupling g.
pub fn build_f<R: Real>(
    obs: &Observable<R>,
    ctx: &MeasurementContext<R>,
    g: R,
) -> Result<CalibrationMatrix<R>> {
    let povm = ctx.povm_at(g)?;
    build_f_from_povm(obs, &povm, g)
}

/// Minimum-norm least-squares solution α = F⁺a. Always returns; the caller
/// inspects the residual to learn whether the identity is exactly satisfied.
pub fn solve_pinv<R: Real>(cal: &CalibrationMatrix<R>) -> ContextualValues<R> {
    let svd = cal.svd();
    let thr = svd.default_rank_threshold();
    solve_pinv_threshold(cal, &svd, thr)
}

/// As [`solve_pinv`] with a caller-chosen rank threshold, for probing the
/// near-singular small-coupling regime.
pub fn solve_pinv_with<R: Real>(cal: &CalibrationMatrix<R>, rank_threshold: R) -> ContextualValues<R> {
    let svd = cal.svd();
    solve_pinv_threshold(cal, &svd, rank_threshold)
}

fn solve_pinv_threshold<R: Real>(
    cal: &CalibrationMatrix<R>,
    svd: &SvdResult<R>,
    threshold: R,
) -> ContextualValues<R> {
    let alphas = svd.solve_min_norm(&cal.eigenvalue_vec, threshold);
    let residual = cal.residual(&alphas);
    ContextualValues {
        alphas,
        method: SolutionMethod::Pseudoinverse,
        residual,
        g: cal.g,
    }
}

/// Exact solve of the square system by LU; rejects non-square or singular F.
pub fn solve_exact<R: Real>(cal: &CalibrationMatrix<R>) -> Result<ContextualValues<R>> {
    let f = cal.normalized();
    let alphas = f.lu_solve(&cal.eigenvalue_vec)?;
    let residual = cal.residual(&alphas);
    Ok(ContextualValues {
        alphas,
        method: SolutionMethod::ExactInverse,
        residual,
        g: cal.g,
    })
}

/// Solves with some components pinned to caller-supplied values, as in
/// hand-picked divergent assignments. The remaining system is solved by
/// minimum-norm least squares and rejected when inconsistent.
pub fn solve_fixed<R: Real>(
    cal: &CalibrationMatrix<R>,
    pins: &[(usize, R)],
) -> Result<ContextualValues<R>> {
    let cols = cal.f.cols();
    let mut seen = vec![false; cols];
    for &(idx, _) in pins {
        if idx >= cols {
            return Err(Error::Invalid(format!(
                "pin index {idx} out of range for {cols} outcomes"
            )));
        }
        if seen[idx] {
            return Err(Error::Invalid(format!("duplicate pin for outcome {idx}")));
        }
        seen[idx] = true;
    }
    if pins.len() == cols {
        let alphas: Vec<R> = {
            let mut a = vec![R::zero(); cols];
            for &(idx, v) in pins {
                a[idx] = v;
            }
            a
        };
        let residual = cal.residual(&alphas);
        if residual > cal.residual_tol_for(&alphas) {
            return Err(Error::InconsistentPins {
                residual: residual.to_f64().unwrap_or(f64::NAN),
            });
        }
        return Ok(ContextualValues {
            alphas,
            method: SolutionMethod::FixedComponent,
            residual,
            g: cal.g,
        });
    }

    let norm = cal.normalized();
    let pinned: Vec<usize> = pins.iter().map(|&(i, _)| i).collect();
    let reduced = norm.without_cols(&pinned);
    let mut rhs = cal.eigenvalue_vec.clone();
    for &(idx, v) in pins {
        for k in 0..norm.rows() {
            rhs[k] -= norm[(k, idx)] * v;
        }
    }
    let svd = crate::matcore::svd_real(&reduced);
    let free = svd.solve_min_norm(&rhs, svd.default_rank_threshold());

    let mut alphas = vec![R::zero(); cols];
    for &(idx, v) in pins {
        alphas[idx] = v;
    }
    let mut it = free.into_iter();
    for (j, slot) in alphas.iter_mut().enumerate() {
        if !seen[j] {
            *slot = it.next().unwrap();
        }
    }
    let residual = cal.residual(&alphas);
    if residual > cal.residual_tol_for(&alphas) {
        return Err(Error::InconsistentPins {
            residual: residual.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(ContextualValues {
        alphas,
        method: SolutionMethod::FixedComponent,
        residual,
        g: cal.g,
    })
}

/// Orthonormal basis of null(F): the directions of contextual-value freedom.
pub fn null_space<R: Real>(cal: &CalibrationMatrix<R>) -> Vec<Vec<R>> {
    let svd = cal.svd();
    let thr = svd.default_rank_threshold();
    svd.null_space(thr)
}

/// One singular triple of F with the corresponding component of Uᵀa:
/// components that are nonzero make their singular value "relevant" — it
/// must be nonzero for the eigenvalue equations to be solvable.
#[derive(Debug, Clone, Copy)]
pub struct RelevantSv<R: Real> {
    pub sigma: R,
    pub u_component: R,
    pub relevant: bool,
}

pub fn relevant_singular_values<R: Real>(cal: &CalibrationMatrix<R>) -> Vec<RelevantSv<R>> {
    let svd = cal.svd();
    let a = &cal.eigenvalue_vec;
    let a_norm = a.iter().map(|&x| x * x).sum::<R>().sqrt();
    let comp_tol = tol::relevant_component::<R>() * a_norm.max(R::one());
    (0..svd.sigma.len())
        .map(|k| {
            let u_component: R = (0..a.len()).map(|i| svd.u[(i, k)] * a[i]).sum();
            RelevantSv {
                sigma: svd.sigma[k],
                u_component,
                relevant: u_component.abs() > comp_tol,
            }
        })
        .collect()
}

/// ‖α‖² together with the fitted leading pole structure when a per-coupling
/// family of solutions is supplied.
#[derive(Debug, Clone)]
pub struct VarianceBound<R: Real> {
    /// ‖α‖² at the given coupling (the smallest sampled one for series).
    pub norm_sq: R,
    /// Fitted coefficients (order, magnitude) of the Laurent expansion of
    /// ‖α(g)‖², most negative order first. Empty without a series.
    pub leading_series: Vec<(i32, R)>,
}

/// Variance bound of a single solution.
pub fn variance_bound<R: Real>(cv: &ContextualValues<R>) -> VarianceBound<R> {
    VarianceBound {
        norm_sq: cv.norm_sq(),
        leading_series: Vec::new(),
    }
}

/// Variance bound over a family of per-coupling solutions: fits ‖α(g)‖² with
/// poles up to `max_pole` and a quadratic regular part.
pub fn variance_bound_series<R: Real>(
    gs: &[R],
    solutions: &[ContextualValues<R>],
    max_pole: u32,
) -> VarianceBound<R> {
    assert_eq!(gs.len(), solutions.len());
    assert!(!gs.is_empty());
    let norms: Vec<R> = solutions.iter().map(|s| s.norm_sq()).collect();
    let fit = pole_fit(gs, &norms, max_pole, 2);
    let series = fit
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, &c)| (fit.min_order + i as i32, c))
        .collect();
    let smallest = gs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0;
    VarianceBound {
        norm_sq: norms[smallest],
        leading_series: series,
    }
}

/// Log–log pole order of each contextual value over a coupling sweep.
pub fn alpha_pole_orders<R: Real>(gs: &[R], solutions: &[ContextualValues<R>]) -> Vec<SlopeFit<R>> {
    assert_eq!(gs.len(), solutions.len());
    let outcomes = solutions[0].alphas.len();
    (0..outcomes)
        .map(|j| {
            let ys: Vec<R> = solutions.iter().map(|s| s.alphas[j]).collect();
            log_log_slope(gs, &ys)
        })
        .collect()
}

/// Options for the minimal-order analysis.
#[derive(Debug, Clone, Copy)]
pub struct OrderOptions<R: Real> {
    /// Largest order probed before declaring the context g-independent.
    pub max_order: usize,
    /// Anchor of the Taylor grid; defaults to the extraction default.
    pub g0: Option<R>,
    /// Coupling at which the truncated system is assembled and solved.
    pub eval_g: Option<R>,
}

impl<R: Real> Default for OrderOptions<R> {
    fn default() -> Self {
        Self {
            max_order: 4,
            g0: None,
            eval_g: None,
        }
    }
}

/// Result of the minimal-nonzero-order analysis of a context's POVM.
#[derive(Debug, Clone)]
pub struct OrderAnalysis<R: Real> {
    /// Smallest order with a nonzero coefficient beyond p_j·1.
    pub n: usize,
    /// Weights p_j of the identity at g = 0.
    pub p_vec: Vec<R>,
    /// Calibration matrix of the order-n coefficients, tr(Π_k E_j⁽ⁿ⁾).
    pub fn_matrix: RMatrix<R>,
    /// Whether the order-n truncated POVM can reproduce the observable.
    pub solvable_at_order_n: bool,
    /// ‖F′(F′⁺a) − a‖ of the truncated system.
    pub residual_at_order_n: R,
    /// Pseudoinverse solution of the truncated system at `eval_g`.
    pub truncated_solution: ContextualValues<R>,
    /// F′(F′⁺a), the reachable part of the eigenvalue vector.
    pub reconstructed: Vec<R>,
    /// Singular values of F′ with their relevance to the target.
    pub relevant_svs: Vec<RelevantSv<R>>,
    /// ‖Σ_j p_j − 1‖ and ‖Σ_j E_j⁽ⁿ⁾‖, the POVM conditions on coefficients.
    pub p_sum_defect: R,
    pub coeff_sum_defect: R,
}

/// Finds the minimal nonzero order n of the POVM expansion
/// E_j = p_j·1 + gⁿ E_j⁽ⁿ⁾ + O(g^{n+1}) and decides whether the observable
/// is reachable at that order.
pub fn order_analysis<R: Real>(
    obs: &Observable<R>,
    ctx: &MeasurementContext<R>,
    opts: &OrderOptions<R>,
) -> Result<OrderAnalysis<R>> {
    assert!(opts.max_order >= 1 && opts.max_order <= 6);
    let g0 = opts.g0.unwrap_or_else(|| default_taylor_anchor(ctx.validity()));
    let dim = ctx.dim();
    let outcomes = ctx.outcome_count();

    let mut series = Vec::with_capacity(outcomes);
    for j in 0..outcomes {
        let eval = |g: R| ctx.povm_at(g).map(|povm| povm[j].clone());
        series.push(taylor_fit_fn(eval, dim, opts.max_order, g0)?);
    }

    // Identity weights and their POVM condition Σ p_j = 1.
    let p_vec: Vec<R> = series
        .iter()
        .map(|s| s.coeffs[0].trace().re / R::of(dim as f64))
        .collect();
    let p_sum_defect = (p_vec.iter().copied().sum::<R>() - R::one()).abs();

    // Smallest order with a coefficient distinguishable from zero.
    let coeff_scale = series
        .iter()
        .flat_map(|s| s.coeffs.iter().skip(1))
        .map(|c| c.max_abs())
        .fold(R::one(), |a, b| a.max(b));
    let nonzero_tol = R::of(1e-5) * coeff_scale;
    let n = (1..=opts.max_order)
        .find(|&m| series.iter().any(|s| s.coeffs[m].max_abs() > nonzero_tol))
        .ok_or(Error::GIndependentContext)?;

    let coeff_sum = series
        .iter()
        .fold(CMatrix::zeros(dim), |acc, s| &acc + &s.coeffs[n]);
    let coeff_sum_defect = coeff_sum.fro_norm();

    // Truncated POVM E′_j = p_j·1 + gⁿ E_j⁽ⁿ⁾ at the evaluation coupling.
    let eval_g = opts.eval_g.unwrap_or(g0);
    let gn = eval_g.powi(n as i32);
    let truncated: Vec<CMatrix<R>> = series
        .iter()
        .zip(&p_vec)
        .map(|(s, &p)| &CMatrix::identity(dim).scale_re(p) + &s.coeffs[n].scale_re(gn))
        .collect();

    let cal = build_f_from_povm(obs, &truncated, eval_g)?;
    // The truncated POVM is only known to Taylor-extraction accuracy, so
    // singular values below that noise floor are structural zeros.
    let svd = cal.svd();
    let noise_floor = R::of(1e-8) * svd.sigma_max().max(R::one());
    let threshold = svd.default_rank_threshold().max(noise_floor);
    let truncated_solution = solve_pinv_with(&cal, threshold);
    let reconstructed = cal.normalized().mul_vec(&truncated_solution.alphas);
    let residual_at_order_n = cal.residual(&truncated_solution.alphas);
    let solvable_at_order_n = residual_at_order_n <= cal.residual_tol_for(&truncated_solution.alphas);
    let relevant_svs = relevant_singular_values(&cal);

    // Fn over the same joint basis, unnormalized like F itself.
    let spaces = joint_subspaces(obs, &truncated)?;
    let mut fn_matrix = RMatrix::zeros(spaces.len(), outcomes);
    for (k, space) in spaces.iter().enumerate() {
        for (j, s) in series.iter().enumerate() {
            fn_matrix[(k, j)] = space.projector_trace(&s.coeffs[n]);
        }
    }

    Ok(OrderAnalysis {
        n,
        p_vec,
        fn_matrix,
        solvable_at_order_n,
        residual_at_order_n,
        truncated_solution,
        reconstructed,
        relevant_svs,
        p_sum_defect,
        coeff_sum_defect,
    })
}
