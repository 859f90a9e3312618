//! Matrix exponential by scaling and squaring with Padé approximants.

use faer::linalg::solvers::Solve;
use faer::Mat;

use crate::error::{Error, Result};
use crate::math::{c64, cabs, cplx, ln};

const THETA: [(usize, f64); 4] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068),
];
const THETA_13: f64 = 5.371_920_351_148_152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn norm1(a: &Mat<c64>) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| cabs(a[(i, j)])).sum::<f64>())
        .fold(0.0, f64::max)
}

fn scaled(a: &Mat<c64>, s: f64) -> Mat<c64> {
    crate::linalg::scaled(a.as_ref(), cplx(s, 0.0))
}

fn pade_low(a: &Mat<c64>, b: &[f64]) -> (Mat<c64>, Mat<c64>) {
    let n = a.nrows();
    let id = Mat::<c64>::identity(n, n);
    let a2 = a * a;
    let mut u = scaled(&id, b[1]);
    let mut v = scaled(&id, b[0]);
    let mut pow = id;
    for k in 1..b.len() / 2 {
        pow = &pow * &a2;
        u += scaled(&pow, b[2 * k + 1]);
        v += scaled(&pow, b[2 * k]);
    }
    (a * &u, v)
}

fn pade13(a: &Mat<c64>) -> (Mat<c64>, Mat<c64>) {
    let n = a.nrows();
    let b = &B13;
    let id = Mat::<c64>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = scaled(&a6, b[13]) + scaled(&a4, b[11]) + scaled(&a2, b[9]);
    let u = &a6 * &inner_u + scaled(&a6, b[7]) + scaled(&a4, b[5]) + scaled(&a2, b[3]) + scaled(&id, b[1]);
    let u = a * &u;
    let inner_v = scaled(&a6, b[12]) + scaled(&a4, b[10]) + scaled(&a2, b[8]);
    let v = &a6 * &inner_v + scaled(&a6, b[6]) + scaled(&a4, b[4]) + scaled(&a2, b[2]) + scaled(&id, b[0]);
    (u, v)
}

/// e^A.
pub(crate) fn expm(a: &Mat<c64>) -> Result<Mat<c64>> {
    let n = a.nrows();
    let norm = norm1(a);
    if !norm.is_finite() {
        return Err(Error::Numerical("matrix exponential of a non-finite matrix".into()));
    }
    let mut squarings = 0u32;
    let (u, v) = if let Some(&(m, _)) = THETA.iter().find(|(_, t)| norm <= *t) {
        let b: &[f64] = match m {
            3 => &B3,
            5 => &B5,
            7 => &B7,
            _ => &B9,
        };
        pade_low(a, b)
    } else {
        if norm > THETA_13 {
            squarings = libm::ceil(ln(norm / THETA_13) / core::f64::consts::LN_2) as u32;
        }
        let s = libm::pow(2.0, -(squarings as f64));
        pade13(&scaled(a, s))
    };
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.partial_piv_lu().solve(&p);
    for _ in 0..squarings {
        r = &r * &r;
    }
    if (0..n).any(|j| (0..n).any(|i| !(r[(i, j)].re.is_finite() && r[(i, j)].im.is_finite()))) {
        return Err(Error::Numerical("matrix exponential overflowed".into()));
    }
    Ok(r)
}
