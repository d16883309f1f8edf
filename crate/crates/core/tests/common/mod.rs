#![allow(dead_code)]

//! Shared randomized fixtures for the integration suites.

use ctxvals_core::matcore::{hermitian_eigen, CMatrix};
use ctxvals_core::measurement::{PostSelection, State};
use ctxvals_core::C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box–Muller from two uniforms.
    let u1: f64 = rng.gen_range(1e-12..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn random_complex_matrix(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix<f64> {
    let entries: Vec<C<f64>> = (0..dim * dim)
        .map(|_| C::new(gaussian(rng), gaussian(rng)))
        .collect();
    CMatrix::from_vec(dim, entries)
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix<f64> {
    random_complex_matrix(rng, dim).hermitian_part()
}

pub fn random_psd(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix<f64> {
    let b = random_complex_matrix(rng, dim);
    b.mul_mat(&b.adjoint())
}

pub fn random_unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<C<f64>> {
    loop {
        let v: Vec<C<f64>> = (0..dim)
            .map(|_| C::new(gaussian(rng), gaussian(rng)))
            .collect();
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.into_iter().map(|z| z / C::new(norm, 0.0)).collect();
        }
    }
}

pub fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> State<f64> {
    let p = random_psd(rng, dim);
    let tr = p.trace().re;
    State::new(p.scale_re(1.0 / tr)).expect("normalized PSD matrix is a state")
}

/// Random effect with eigenvalues kept inside (0.05, 0.95), away from both
/// the invalid region above 1 and near-null post-selections.
pub fn random_effect(rng: &mut ChaCha8Rng, dim: usize) -> PostSelection<f64> {
    let h = random_hermitian(rng, dim);
    let eig = hermitian_eigen(&h);
    let lo = eig.values[dim - 1];
    let hi = eig.values[0];
    let span = (hi - lo).max(1e-9);
    let mut effect = CMatrix::zeros(dim);
    for (k, &lambda) in eig.values.iter().enumerate() {
        let mapped = 0.05 + 0.9 * (lambda - lo) / span;
        let v = eig.eigenvector(k);
        effect = &effect + &CMatrix::outer(&v, &v).scale_re(mapped);
    }
    PostSelection::new(effect).expect("spectrum mapped into [0.05, 0.95]")
}
