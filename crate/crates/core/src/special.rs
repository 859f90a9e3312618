//! Complex digamma and harmonic numbers.

use crate::error::{Error, Result};
use crate::math::{c64, cplx, floor, EULER_GAMMA};
use alloc::format;
use core::f64::consts::PI;

// Bernoulli-number coefficients B_2k / (2k) of the asymptotic tail.
const TAIL: [f64; 6] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
];

fn is_pole(z: c64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && floor(z.re) == z.re
}

/// Digamma function ψ(z) for complex z.
///
/// Recurrence ψ(z) = ψ(z+1) − 1/z lifts the argument to Re z ≥ 10, then the
/// asymptotic series through z⁻¹² is summed. Arguments with a large negative
/// real part are first reflected.
pub fn digamma_complex(z: c64) -> Result<c64> {
    if is_pole(z) {
        return Err(Error::Domain(format!("digamma has a pole at {}", z.re)));
    }
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("digamma of non-finite argument {z}")));
    }
    if z.re < -10.0 {
        // ψ(z) = ψ(1 − z) − π cot(πz)
        let pz = z * PI;
        let cot = pz.cos() / pz.sin();
        return Ok(digamma_complex(c64::new(1.0, 0.0) - z)? - cot * PI);
    }
    let mut shift = c64::new(0.0, 0.0);
    let mut w = z;
    while w.re < 10.0 {
        shift -= w.inv();
        w += 1.0;
    }
    let inv2 = (w * w).inv();
    let mut series = c64::new(0.0, 0.0);
    let mut pow = inv2;
    for c in TAIL {
        series += pow * c;
        pow *= inv2;
    }
    Ok(shift + w.ln() - w.inv() * 0.5 - series)
}

/// Real digamma, for real arguments off the poles.
pub fn digamma(x: f64) -> Result<f64> {
    Ok(digamma_complex(cplx(x, 0.0))?.re)
}

/// Harmonic number H(z) = ψ(z + 1) + γ, analytically continued.
pub fn harmonic_number(z: c64) -> Result<c64> {
    Ok(digamma_complex(z + 1.0)? + EULER_GAMMA)
}
