use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: defect {defect:e} exceeds tolerance {tol:e}")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("matrix is not positive semidefinite: eigenvalue {min_eig:e} below -{tol:e}")]
    NotPositive { min_eig: f64, tol: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: String, right: String },

    #[error("not a valid density matrix: {reason}")]
    InvalidState { reason: String },

    #[error("not a valid probability operator: {reason}")]
    InvalidEffect { reason: String },

    #[error("syntax error at byte {offset}: {msg}")]
    Parse { offset: usize, msg: String },

    #[error("domain error evaluating `{expr}` at g = {g}: {msg}")]
    Domain { expr: String, g: f64, msg: String },

    #[error("coupling g = {g} outside validity interval ({lo}, {hi}]")]
    OutsideValidity { g: f64, lo: f64, hi: f64 },

    #[error("POVM completeness violated: defect {defect:e} exceeds {tol:e}")]
    PovmIncomplete { defect: f64, tol: f64 },

    #[error("Taylor fit failed: non-analytic entry or insufficient order (held-out residual {residual:e} > {tol:e})")]
    NonAnalytic { residual: f64, tol: f64 },

    #[error("context incompatible with observable: worst commutator norm {worst:e} ({detail})")]
    Incompatible { worst: f64, detail: String },

    #[error("post-selection probability vanishes: denominator {denominator:e}")]
    NullPostSelection { denominator: f64 },

    #[error("outcome {outcome} has vanishing probability {prob:e}")]
    ImpossibleOutcome { outcome: usize, prob: f64 },

    #[error("pinned components leave an inconsistent system: residual {residual:e}")]
    InconsistentPins { residual: f64 },

    #[error("singular matrix: {context}")]
    Singular { context: String },

    #[error("measurement context is g-independent to the probed order")]
    GIndependentContext,

    #[error("orthogonal pre/post selection: overlap {overlap:e} below tolerance")]
    OrthogonalSelection { overlap: f64 },

    #[error("weak-limit fit did not converge: {reason}")]
    NoConvergence { reason: String },

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
