//! Dense complex-matrix foundations: Hermiticity and positivity checks,
//! spectral decomposition, SVD, pseudoinverse, principal square root, polar
//! decomposition and commutators.
//!
//! Everything here is sized for desk-scale operators (dimension ≤ ~8) and
//! favors accuracy and determinism over throughput.

mod cmatrix;
mod eigen;
mod factor;
mod rmatrix;
mod svd;

pub use cmatrix::{anticommutator, commutator, CMatrix};
pub use eigen::{
    check_psd, hermitian_eigen, merge_eigenspaces, min_eigenvalue, spectral_decompose,
    EigenSpace, HermitianEigen,
};
pub use factor::{log_unitary, polar_decompose, principal_sqrt, PolarFactors};
pub use rmatrix::RMatrix;
pub use svd::{
    pseudoinverse, pseudoinverse_with, svd_complex, svd_real, ComplexSvd, SvdResult,
};
