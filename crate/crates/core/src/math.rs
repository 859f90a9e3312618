//! Thin wrappers so the same code builds with and without `std`.

pub(crate) use faer::c64;

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn expm1(x: f64) -> f64 {
    libm::expm1(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[cfg(feature = "quadrature")]
#[inline]
pub(crate) fn atan(x: f64) -> f64 {
    libm::atan(x)
}

#[cfg(feature = "quadrature")]
#[inline]
pub(crate) fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}

#[inline]
pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub(crate) fn cabs(z: c64) -> f64 {
    libm::hypot(z.re, z.im)
}

#[inline]
pub(crate) fn cplx(re: f64, im: f64) -> c64 {
    c64::new(re, im)
}

pub(crate) const I: c64 = c64 { re: 0.0, im: 1.0 };
pub(crate) const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: c64 = c64 { re: 1.0, im: 0.0 };

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
