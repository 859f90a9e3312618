//! Thermal bosonic baths: occupations, spectral densities and the one-sided
//! Fourier transforms I(ω), S(ω) of the bath correlation function.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::math::{c64, cplx, expm1, EULER_GAMMA};
use crate::operators::Operator;
use crate::special::{digamma, harmonic_number};

/// Spectral density signature: `(ω, χ, ω_c) -> J(ω)`, called for ω > 0 only.
pub type DensityFn = fn(f64, f64, f64) -> f64;

#[derive(Clone, Copy, Debug)]
pub enum SpectralDensity {
    /// J(ω) = χω / (1 + ω²/ω_c²).
    OhmicDrude,
    /// User-supplied density. S(ω) is then evaluated by quadrature.
    Custom(DensityFn),
}

/// Ohmic spectral density with a Drude cutoff.
pub fn ohmic_drude(omega: f64, chi: f64, omega_c: f64) -> f64 {
    chi * omega / (1.0 + (omega / omega_c) * (omega / omega_c))
}

/// Bose–Einstein occupation 1/(e^{Ω/T} − 1); negative Ω is the analytic
/// continuation n̄(−Ω) = −1 − n̄(Ω).
pub fn bose_einstein(omega: f64, temperature: f64) -> Result<f64> {
    if !(temperature > 0.0) {
        return Err(Error::Domain(format!("temperature must be positive, got {temperature}")));
    }
    if omega == 0.0 {
        return Err(Error::Domain("occupation diverges at zero frequency".into()));
    }
    Ok(1.0 / expm1(omega / temperature))
}

/// Correlation-function coefficients of one bath.
#[derive(Clone, Copy, Debug)]
pub struct CorrelationCoefficients {
    pub temperature: f64,
    pub chi: f64,
    pub omega_c: f64,
    pub density: SpectralDensity,
}

impl CorrelationCoefficients {
    /// Validating constructor.
    pub fn new(temperature: f64, chi: f64, omega_c: f64, density: SpectralDensity) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::Validation(format!("temperature must be positive, got {temperature}")));
        }
        if !(chi > 0.0 && chi.is_finite()) {
            return Err(Error::Validation(format!("chi must be positive, got {chi}")));
        }
        if !(omega_c > 0.0 && omega_c.is_finite()) {
            return Err(Error::Validation(format!("omega_c must be positive, got {omega_c}")));
        }
        #[cfg(not(feature = "quadrature"))]
        if matches!(density, SpectralDensity::Custom(_)) {
            return Err(Error::Validation("custom spectral densities need the `quadrature` feature".into()));
        }
        Ok(Self { temperature, chi, omega_c, density })
    }

    /// J(ω), extended as an odd function.
    pub fn spectral_density(&self, omega: f64) -> f64 {
        let j = |w: f64| match self.density {
            SpectralDensity::OhmicDrude => ohmic_drude(w, self.chi, self.omega_c),
            SpectralDensity::Custom(f) => f(w, self.chi, self.omega_c),
        };
        if omega > 0.0 {
            j(omega)
        } else if omega < 0.0 {
            -j(-omega)
        } else {
            0.0
        }
    }

    /// I(ω) = J(ω)(1 + n̄(ω)), with the limit T·J′(0) at ω = 0.
    pub fn rate_integral(&self, omega: f64) -> f64 {
        if omega == 0.0 {
            return self.temperature * self.slope_at_zero();
        }
        let w = omega.abs();
        let n = 1.0 / expm1(w / self.temperature);
        // for ω < 0, J(ω)(1 + n̄(ω)) = J(|ω|)n̄(|ω|) without the cancellation
        if omega > 0.0 {
            self.spectral_density(w) * (1.0 + n)
        } else {
            self.spectral_density(w) * n
        }
    }

    fn slope_at_zero(&self) -> f64 {
        match self.density {
            SpectralDensity::OhmicDrude => self.chi,
            SpectralDensity::Custom(f) => {
                let h = 1e-7 * self.omega_c;
                f(h, self.chi, self.omega_c) / h
            }
        }
    }

    /// Principal-value integral S(ω).
    pub fn shift_integral(&self, omega: f64) -> f64 {
        match self.density {
            SpectralDensity::OhmicDrude => drude_shift(omega, self.temperature, self.chi, self.omega_c),
            #[cfg(feature = "quadrature")]
            SpectralDensity::Custom(_) => oracle::pv_shift(omega, self, 1e-10).value,
            #[cfg(not(feature = "quadrature"))]
            SpectralDensity::Custom(_) => f64::NAN,
        }
    }

    /// γ(ω, ω′) = π[I(ω) + I(ω′)] + i[S(ω) − S(ω′)].
    pub fn gamma(&self, omega: f64, omega_p: f64) -> c64 {
        self.gamma_from(self.rate_integral(omega), self.rate_integral(omega_p), self.shift_integral(omega), self.shift_integral(omega_p))
    }

    /// π(ω, ω′) = (π/2i)[I(ω) − I(ω′)] + ½[S(ω) + S(ω′)].
    pub fn pi(&self, omega: f64, omega_p: f64) -> c64 {
        self.pi_from(self.rate_integral(omega), self.rate_integral(omega_p), self.shift_integral(omega), self.shift_integral(omega_p))
    }

    /// Two-sided transform 2πI(ω̄) used for clustered jump operators.
    pub fn gamma_full(&self, omega_bar: f64) -> f64 {
        2.0 * PI * self.rate_integral(omega_bar)
    }

    #[inline]
    pub(crate) fn gamma_from(&self, i1: f64, i2: f64, s1: f64, s2: f64) -> c64 {
        cplx(PI * (i1 + i2), s1 - s2)
    }

    #[inline]
    pub(crate) fn pi_from(&self, i1: f64, i2: f64, s1: f64, s2: f64) -> c64 {
        // (π/2i)·x = −i(π/2)·x
        cplx(0.5 * (s1 + s2), -0.5 * PI * (i1 - i2))
    }
}

/// Closed form of S(ω) for the Ohmic–Drude density.
///
/// With x = ω_c/(2πT) the cotangent and the pair H(−x) + H(x) combine
/// through the reflection formula into ψ(x) + ψ(x+1) + 2γ, which is regular
/// at every temperature.
pub fn drude_shift(omega: f64, temperature: f64, chi: f64, omega_c: f64) -> f64 {
    let pre = -chi / (2.0 * (1.0 + (omega / omega_c) * (omega / omega_c)));
    if omega == 0.0 {
        return pre * PI * omega_c;
    }
    let x = omega_c / (2.0 * PI * temperature);
    let y = omega / (2.0 * PI * temperature);
    let h_im = harmonic_number(cplx(0.0, -y)).expect("1 - iy is never a pole").re;
    let psi = digamma(x).expect("x > 0") + digamma(x + 1.0).expect("x > 0");
    pre * (PI * omega_c - 2.0 * omega * h_im + omega * (psi + 2.0 * EULER_GAMMA))
}

/// A thermal bath with its coupling operators.
#[derive(Clone, Debug)]
pub struct BathSpec {
    pub label: String,
    pub alpha: f64,
    pub coefficients: CorrelationCoefficients,
    pub coupling_ops: Vec<Operator>,
}

impl BathSpec {
    /// Ohmic–Drude bath. Coupling operators must be Hermitian and share one
    /// space.
    pub fn new(
        label: impl Into<String>,
        temperature: f64,
        alpha: f64,
        chi: f64,
        omega_c: f64,
        coupling_ops: Vec<Operator>,
    ) -> Result<Self> {
        Self::with_density(label, temperature, alpha, chi, omega_c, SpectralDensity::OhmicDrude, coupling_ops)
    }

    pub fn with_density(
        label: impl Into<String>,
        temperature: f64,
        alpha: f64,
        chi: f64,
        omega_c: f64,
        density: SpectralDensity,
        coupling_ops: Vec<Operator>,
    ) -> Result<Self> {
        let label = label.into();
        let coefficients = CorrelationCoefficients::new(temperature, chi, omega_c, density)
            .map_err(|e| Error::Validation(format!("bath {label}: {e}")))?;
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::Validation(format!("bath {label}: alpha must be >= 0, got {alpha}")));
        }
        if coupling_ops.is_empty() {
            return Err(Error::Validation(format!("bath {label}: no coupling operators")));
        }
        for (beta, a) in coupling_ops.iter().enumerate() {
            a.ensure_same_space(&coupling_ops[0])?;
            if !a.is_hermitian(1e-12) {
                return Err(Error::Validation(format!(
                    "bath {label}: coupling operator {beta} is not Hermitian (residual {:e})",
                    a.hermiticity_residual()
                )));
            }
        }
        Ok(Self { label, alpha, coefficients, coupling_ops })
    }

    pub fn temperature(&self) -> f64 {
        self.coefficients.temperature
    }
}

pub fn spectral_density(omega: f64, bath: &BathSpec) -> f64 {
    bath.coefficients.spectral_density(omega)
}

pub fn i_of_omega(omega: f64, bath: &BathSpec) -> f64 {
    bath.coefficients.rate_integral(omega)
}

pub fn s_of_omega(omega: f64, bath: &BathSpec) -> f64 {
    bath.coefficients.shift_integral(omega)
}

pub fn gamma_pair(omega: f64, omega_p: f64, bath: &BathSpec) -> c64 {
    bath.coefficients.gamma(omega, omega_p)
}

pub fn pi_pair(omega: f64, omega_p: f64, bath: &BathSpec) -> c64 {
    bath.coefficients.pi(omega, omega_p)
}

pub fn gamma_full(omega_bar: f64, bath: &BathSpec) -> f64 {
    bath.coefficients.gamma_full(omega_bar)
}

#[cfg(feature = "quadrature")]
pub use oracle::{pv_quadrature_s, quadrature_i};

#[cfg(feature = "quadrature")]
pub(crate) mod oracle {
    use super::*;
    use crate::math::{atan, ln, tanh};
    use crate::quadrature::{integrate, QuadratureEstimate};

    const BUDGET: usize = 4000;

    /// The delta-collapsed form of the I(ω) integral: J(|ω|)(1+n̄(|ω|)) for
    /// ω > 0 and J(|ω|)n̄(|ω|) for ω < 0.
    pub fn quadrature_i(omega: f64, bath: &BathSpec) -> Result<f64> {
        let c = &bath.coefficients;
        let w = omega.abs();
        let j = c.spectral_density(w);
        let n = bose_einstein(w, c.temperature)?;
        Ok(if omega > 0.0 { j * (1.0 + n) } else { j * n })
    }

    /// Cauchy principal value of the S(ω) integral by adaptive quadrature.
    /// Fails with the achieved error if the refinement budget runs out.
    pub fn pv_quadrature_s(omega: f64, bath: &BathSpec) -> Result<QuadratureEstimate> {
        let est = pv_shift(omega, &bath.coefficients, 1e-8);
        if est.converged {
            Ok(est)
        } else {
            Err(Error::Quadrature { estimate: est.value, achieved_error: est.error })
        }
    }

    pub(crate) fn pv_shift(omega: f64, c: &CorrelationCoefficients, abs_tol: f64) -> QuadratureEstimate {
        let t = c.temperature;
        let j = |k: f64| c.spectral_density(k);
        let cutoff = 50.0 * c.omega_c.max(omega.abs());
        let tol = abs_tol / 4.0;
        if omega == 0.0 {
            let body = integrate(|k| -j(k) / k, 0.0, cutoff, tol, BUDGET);
            return body.combine(tail(0.0, c, cutoff, tol));
        }
        // Integrand J(k)[(1+n)/(ω−k) + n/(ω+k)] = J(k)[ω coth(k/2T) + k]/(ω² − k²),
        // with its pole at k = |ω| split off as h(k)/(|ω| − k).
        let p = omega.abs();
        let numer = move |k: f64| j(k) / tanh(k / (2.0 * t)) * omega + j(k) * k;
        let h = move |k: f64| numer(k) / (p + k);
        let f = move |k: f64| h(k) / (p - k);
        let delta = 0.5 * p;
        let left = integrate(f, 0.0, p - delta, tol, BUDGET);
        let paired = integrate(|u: f64| (h(p - u) - h(p + u)) / u, 0.0, delta, tol, BUDGET);
        let right = integrate(f, p + delta, cutoff, tol, BUDGET);
        left.combine(paired).combine(right).combine(tail(omega, c, cutoff, tol))
    }

    // Integral over [K, ∞). The thermal part is integrated numerically on
    // k = K/u; the remainder J(k)/(ω−k) is closed-form for Ohmic–Drude.
    fn tail(omega: f64, c: &CorrelationCoefficients, cutoff: f64, tol: f64) -> QuadratureEstimate {
        let t = c.temperature;
        let mapped = |g: &dyn Fn(f64) -> f64| {
            integrate(
                |u: f64| {
                    if u == 0.0 {
                        0.0
                    } else {
                        let k = cutoff / u;
                        g(k) * cutoff / (u * u)
                    }
                },
                0.0,
                1.0,
                tol,
                BUDGET,
            )
        };
        let thermal = |k: f64| {
            let n = 1.0 / expm1(k / t);
            c.spectral_density(k) * 2.0 * n * omega / (omega * omega - k * k)
        };
        let thermal_part = if omega == 0.0 || cutoff / t > 700.0 { QuadratureEstimate::exact(0.0) } else { mapped(&thermal) };
        let plain_part = match c.density {
            SpectralDensity::OhmicDrude => {
                let wc = c.omega_c;
                let a = omega / (omega * omega + wc * wc);
                let b = -wc * wc / (omega * omega + wc * wc);
                let v = c.chi
                    * wc
                    * wc
                    * (a * (ln(cutoff - omega) - 0.5 * ln(wc * wc + cutoff * cutoff)) + b / wc * (0.5 * PI - atan(cutoff / wc)));
                QuadratureEstimate::exact(v)
            }
            SpectralDensity::Custom(_) => mapped(&|k: f64| c.spectral_density(k) / (omega - k)),
        };
        thermal_part.combine(plain_part)
    }
}
