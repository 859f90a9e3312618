#![allow(dead_code)]

use meqforge_core::operators::{CompositeSpace, Operator};
use meqforge_core::{c64, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Mat<c64> {
    Mat::from_fn(n, m, |_, _| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

pub fn random_hermitian(space: &CompositeSpace, rng: &mut ChaCha8Rng) -> Operator {
    let d = space.total_dim();
    let a = random_matrix(d, d, rng);
    let h = Mat::from_fn(d, d, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5);
    Operator::new(space.clone(), h).unwrap()
}

/// Random density matrix B B† / Tr.
pub fn random_density(space: &CompositeSpace, rng: &mut ChaCha8Rng) -> Operator {
    let d = space.total_dim();
    let b = random_matrix(d, d, rng);
    let rho = &b * b.adjoint();
    let tr: c64 = (0..d).map(|i| rho[(i, i)]).sum();
    Operator::new(space.clone(), Mat::from_fn(d, d, |i, j| rho[(i, j)] / tr)).unwrap()
}

pub fn fro(m: &Mat<c64>) -> f64 {
    m.norm_l2()
}

pub fn rel_diff(a: &Mat<c64>, b: &Mat<c64>) -> f64 {
    let scale = fro(a).max(fro(b));
    if scale == 0.0 {
        0.0
    } else {
        fro(&(a - b)) / scale
    }
}

/// ‖ρ − σ‖₁ / 2 for Hermitian arguments.
pub fn trace_distance(a: &Operator, b: &Operator) -> f64 {
    let diff = a.matrix() - b.matrix();
    let ev = diff.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
    0.5 * ev.iter().map(|x| x.abs()).sum::<f64>()
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}
