//! Qubit–resonator chain: resonator L – qubit 1 – qubit 2 – resonator R,
//! each resonator coupled to its own thermal bath.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::bath::{bose_einstein, BathSpec};
use crate::error::{Error, Result};
use crate::liouvillian::{build_liouvillian, BathDissipator, BuildOptions, LiouvillianBuild};
use crate::linalg::scaled;
use crate::math::cplx;
use crate::operators::{annihilation, embed, pauli, sandwich, super_anticommutator, CompositeSpace, Operator, Pauli};
use crate::secular::SecularPolicy;

/// How a resonator couples to its bath.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CouplingQuadrature {
    /// a + a†.
    #[default]
    Position,
    /// i(a† − a).
    Momentum,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainParams {
    pub omega1: f64,
    pub omega2: f64,
    pub omega_l: f64,
    pub omega_r: f64,
    pub g1: f64,
    pub g2: f64,
    pub g12: f64,
    /// Resonator truncation.
    pub n: usize,
    pub t_l: f64,
    pub t_r: f64,
    pub alpha_l: f64,
    pub alpha_r: f64,
    pub chi: f64,
    pub omega_c: f64,
    pub coupling: CouplingQuadrature,
}

impl Default for ChainParams {
    fn default() -> Self {
        Self {
            omega1: 1.0,
            omega2: 1.0,
            omega_l: 1.0,
            omega_r: 1.0,
            g1: 0.05,
            g2: 0.05,
            g12: 0.05,
            n: 4,
            t_l: 0.5,
            t_r: 0.1,
            alpha_l: 0.01,
            alpha_r: 0.01,
            chi: 0.1,
            omega_c: 100.0,
            coupling: CouplingQuadrature::Position,
        }
    }
}

impl ChainParams {
    /// Same couplings g1 = g2 = g, and equal resonator frequencies.
    pub fn symmetric(g: f64, g12: f64, omega_res: f64) -> Self {
        Self { g1: g, g2: g, g12, omega_l: omega_res, omega_r: omega_res, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Validation(format!("resonator truncation {} < 2", self.n)));
        }
        for (name, v) in [
            ("omega1", self.omega1),
            ("omega2", self.omega2),
            ("Omega_L", self.omega_l),
            ("Omega_R", self.omega_r),
            ("T_L", self.t_l),
            ("T_R", self.t_r),
            ("chi", self.chi),
            ("omega_c", self.omega_c),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("g1", self.g1), ("g2", self.g2), ("g12", self.g12), ("alpha_L", self.alpha_l), ("alpha_R", self.alpha_r)] {
            if !v.is_finite() {
                return Err(Error::Validation(format!("{name} must be finite")));
            }
        }
        Ok(())
    }
}

/// Operators of the chain on dims [N, 2, 2, N].
#[derive(Clone, Debug)]
pub struct ChainSystem {
    pub space: CompositeSpace,
    pub h_full: Operator,
    /// Qubits and resonators without any of the g couplings.
    pub h_bare: Operator,
    pub couple_l: Operator,
    pub couple_r: Operator,
    pub a_l: Operator,
    pub a_r: Operator,
}

pub fn chain_hamiltonians(p: &ChainParams) -> Result<ChainSystem> {
    p.validate()?;
    let space = CompositeSpace::new(vec![p.n, 2, 2, p.n])?;
    let a = annihilation(p.n)?;
    let a_l = embed(&a, 0, &space)?;
    let a_r = embed(&a, 3, &space)?;
    let sz1 = embed(&pauli(Pauli::Z), 1, &space)?;
    let sz2 = embed(&pauli(Pauli::Z), 2, &space)?;
    let sp1 = embed(&pauli(Pauli::Plus), 1, &space)?;
    let sp2 = embed(&pauli(Pauli::Plus), 2, &space)?;
    let sm1 = sp1.adjoint();
    let sm2 = sp2.adjoint();
    let al_dag = a_l.adjoint();
    let ar_dag = a_r.adjoint();

    let h_bare = &(&(&sz1 * (0.5 * p.omega1)) + &(&sz2 * (0.5 * p.omega2)))
        + &(&(&(&al_dag * &a_l) * p.omega_l) + &(&(&ar_dag * &a_r) * p.omega_r));
    let left = &(&(&sp1 * &a_l) + &(&sm1 * &al_dag)) * p.g1;
    let right = &(&(&sp2 * &a_r) + &(&sm2 * &ar_dag)) * p.g2;
    let qq = &(&(&sp1 * &sm2) + &(&sm1 * &sp2)) * p.g12;
    let h_full = &(&(&h_bare + &left) + &right) + &qq;

    let quad = |a: &Operator| match p.coupling {
        CouplingQuadrature::Position => a + &a.adjoint(),
        CouplingQuadrature::Momentum => (&a.adjoint() - a).scale(cplx(0.0, 1.0)),
    };
    Ok(ChainSystem {
        couple_l: quad(&a_l),
        couple_r: quad(&a_r),
        space,
        h_full,
        h_bare,
        a_l,
        a_r,
    })
}

/// Baths "L" and "R" attached to the two resonators.
pub fn chain_baths(p: &ChainParams, sys: &ChainSystem) -> Result<Vec<BathSpec>> {
    Ok(vec![
        BathSpec::new("L", p.t_l, p.alpha_l, p.chi, p.omega_c, vec![sys.couple_l.clone()])?,
        BathSpec::new("R", p.t_r, p.alpha_r, p.chi, p.omega_c, vec![sys.couple_r.clone()])?,
    ])
}

/// Total excitation number a_L†a_L + σ₊σ₋⁽¹⁾ + σ₊σ₋⁽²⁾ + a_R†a_R.
pub fn chain_number_operator(sys: &ChainSystem) -> Result<Operator> {
    let space = &sys.space;
    let e = &pauli(Pauli::Plus) * &pauli(Pauli::Minus);
    let q1 = embed(&e, 1, space)?;
    let q2 = embed(&e, 2, space)?;
    Ok(&(&(&sys.a_l.adjoint() * &sys.a_l) + &(&sys.a_r.adjoint() * &sys.a_r)) + &(&q1 + &q2))
}

/// Global or local construction of the jump operators.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    #[default]
    Global,
    Local,
}

/// Chain system plus its generator.
pub fn build_chain(
    p: &ChainParams,
    policy: SecularPolicy,
    mode: Mode,
    options: &BuildOptions,
) -> Result<(ChainSystem, LiouvillianBuild)> {
    let sys = chain_hamiltonians(p)?;
    let baths = chain_baths(p, &sys)?;
    let basis = match mode {
        Mode::Global => &sys.h_full,
        Mode::Local => &sys.h_bare,
    };
    let build = build_liouvillian(&sys.h_full, basis, &baths, policy, options)?;
    Ok((sys, build))
}

/// Local master equation written out by hand: per resonator
/// γ(1+n̄)(a·a† − ½{a†a, ·}) + γn̄(a†·a − ½{aa†, ·}) with γ = 2πα²J(Ω), plus
/// the Lamb shift α²[S(Ω)a†a + S(−Ω)aa†] when requested.
pub fn local_explicit_liouvillian(p: &ChainParams, include_lamb_shift: bool) -> Result<LiouvillianBuild> {
    let sys = chain_hamiltonians(p)?;
    let baths = chain_baths(p, &sys)?;
    if p.coupling != CouplingQuadrature::Position {
        return Err(Error::Validation("the explicit local form assumes position coupling".into()));
    }
    let mut per_bath = Vec::new();
    let mut lamb = Operator::zeros(&sys.space);
    for (bath, a, omega) in [(&baths[0], &sys.a_l, p.omega_l), (&baths[1], &sys.a_r, p.omega_r)] {
        let c = &bath.coefficients;
        let gamma = 2.0 * PI * bath.alpha * bath.alpha * c.spectral_density(omega);
        let nbar = bose_einstein(omega, c.temperature)?;
        let ad = a.adjoint();
        let half = cplx(0.5, 0.0);
        let mut down = sandwich(a, &ad)?;
        down -= scaled(super_anticommutator(&(&ad * a)).as_ref(), half);
        let mut up = sandwich(&ad, a)?;
        up -= scaled(super_anticommutator(&(a * &ad)).as_ref(), half);
        let d = scaled(down.as_ref(), cplx(gamma * (1.0 + nbar), 0.0)) + scaled(up.as_ref(), cplx(gamma * nbar, 0.0));
        per_bath.push(BathDissipator { label: bath.label.clone(), matrix: d });
        let a2 = bath.alpha * bath.alpha;
        let shift = &(&(&ad * a) * (a2 * c.shift_integral(omega))) + &(&(a * &ad) * (a2 * c.shift_integral(-omega)));
        lamb = &lamb + &shift;
    }
    LiouvillianBuild::from_parts(
        sys.h_full.clone(),
        lamb,
        per_bath,
        include_lamb_shift,
        SecularPolicy::FullSecular,
        4,
        0,
        true,
        crate::liouvillian::relaxation_time(&baths),
    )
}

/// Eigenvalues {−ω, −g₁₂, g₁₂, ω} of two resonant qubits with exchange
/// coupling g₁₂, ascending.
pub fn qq_effective_spectrum(omega: f64, g12: f64) -> Result<[f64; 4]> {
    if !(g12 >= 0.0) {
        return Err(Error::Validation(format!("g12 must be >= 0, got {g12}")));
    }
    let mut e = [-omega, -g12, g12, omega];
    e.sort_by(f64::total_cmp);
    Ok(e)
}

/// Qubit–qubit coupling that puts a single-excitation transition of the
/// qubit pair in resonance with the resonators.
pub fn resonant_qq_coupling(omega_res: f64, omega_qubit: f64) -> f64 {
    omega_res - omega_qubit
}

