mod common;

use std::f64::consts::PI;

use common::*;
use meqforge_core::bath::*;
use meqforge_core::liouvillian::*;
use meqforge_core::models::{build_chain, local_explicit_liouvillian, ChainParams, Mode};
use meqforge_core::operators::*;
use meqforge_core::secular::*;
use meqforge_core::solve::*;
use meqforge_core::spectral::*;
use meqforge_core::{c64, Mat};

const POLICIES: [SecularPolicy; 5] = [
    SecularPolicy::Redfield,
    SecularPolicy::FullSecular,
    SecularPolicy::Partial(1e4),
    SecularPolicy::Partial(30.0),
    SecularPolicy::Unified(0.3),
];

fn no_lamb() -> BuildOptions {
    BuildOptions { include_lamb_shift: false, ..BuildOptions::default() }
}

/// Generator by direct pair summation, for comparison with the fast route.
fn naive(h: &Operator, baths: &[BathSpec], policy: SecularPolicy, lamb: bool) -> (Mat<c64>, DissipatorSet) {
    let eig = diagonalize(h, None).unwrap();
    let jumps: Vec<Vec<JumpOperator>> = baths
        .iter()
        .map(|b| b.coupling_ops.iter().enumerate().flat_map(|(k, a)| jump_operators(&eig, a, &b.label, k).unwrap()).collect())
        .collect();
    let clusters = match policy {
        SecularPolicy::Unified(w) => Some(cluster_frequencies(&bohr_frequencies(&eig), w).unwrap()),
        _ => None,
    };
    let ctx = PairContext { tau_r: relaxation_time(baths), tol_degeneracy: 1e-9, clusters: clusters.as_deref() };
    let set = build_dissipator(&jumps, baths, policy, &ctx).unwrap();
    let mut h_eff = h.clone();
    if lamb {
        if let Some(ls) = build_lamb_shift(&jumps, baths, policy, &ctx).unwrap() {
            h_eff = &h_eff + &ls;
        }
    }
    let mut total = super_commutator(&h_eff) * faer::Scale(c64::new(0.0, -1.0));
    for b in &set.per_bath {
        total += &b.matrix;
    }
    (total, set)
}

fn random_problem(seed: u64, dims: Vec<usize>) -> (Operator, Vec<BathSpec>) {
    let mut r = rng(seed);
    let space = CompositeSpace::new(dims).unwrap();
    let h = random_hermitian(&space, &mut r);
    let a1 = random_hermitian(&space, &mut r);
    let a2 = random_hermitian(&space, &mut r);
    let a3 = random_hermitian(&space, &mut r);
    let baths = vec![
        BathSpec::new("hot", 0.8, 0.05, 0.1, 100.0, vec![a1, a2]).unwrap(),
        BathSpec::new("cold", 0.2, 0.03, 0.1, 100.0, vec![a3]).unwrap(),
    ];
    (h, baths)
}

#[test]
fn fast_route_matches_pair_sum() {
    for (seed, dims) in [(1, vec![2, 2]), (2, vec![3, 2]), (3, vec![5])] {
        let (h, baths) = random_problem(seed, dims);
        for policy in POLICIES {
            for lamb in [false, true] {
                let opts = BuildOptions { include_lamb_shift: lamb, ..BuildOptions::default() };
                let fast = build_liouvillian(&h, &h, &baths, policy, &opts).unwrap();
                let (slow, set) = naive(&h, &baths, policy, lamb);
                assert!(rel_diff(&fast.total, &slow) < 1e-11, "{policy:?} lamb={lamb}: {}", rel_diff(&fast.total, &slow));
                for (a, b) in fast.per_bath.iter().zip(&set.per_bath) {
                    assert_eq!(a.label, b.label);
                    assert!(rel_diff(&a.matrix, &b.matrix) < 1e-11);
                }
                assert_eq!((fast.kept_pairs, fast.dropped_pairs), (set.kept_pairs, set.dropped_pairs), "{policy:?}");
            }
        }
    }
}

#[test]
fn policy_limits() {
    let (h, baths) = random_problem(8, vec![2, 3]);
    let opts = BuildOptions::default();
    let red = build_liouvillian(&h, &h, &baths, SecularPolicy::Redfield, &opts).unwrap();
    let fsa = build_liouvillian(&h, &h, &baths, SecularPolicy::FullSecular, &opts).unwrap();
    let psa_inf = build_liouvillian(&h, &h, &baths, SecularPolicy::Partial(f64::INFINITY), &opts).unwrap();
    let psa_0 = build_liouvillian(&h, &h, &baths, SecularPolicy::Partial(0.0), &opts).unwrap();
    let uni = build_liouvillian(&h, &h, &baths, SecularPolicy::Unified(1e-9), &opts).unwrap();
    assert!(rel_diff(&psa_inf.total, &red.total) < 1e-12);
    assert!(rel_diff(&psa_0.total, &fsa.total) < 1e-12);
    assert!(rel_diff(&uni.total, &fsa.total) < 1e-12);
    assert_eq!(red.dropped_pairs, 0);
    assert!(fsa.dropped_pairs > 0);
    assert_eq!(psa_0.kept_pairs, fsa.kept_pairs);
    assert!(rel_diff(&red.total, &fsa.total) > 1e-6);
}

#[test]
fn trace_and_hermiticity() {
    let (h, baths) = random_problem(5, vec![2, 2]);
    let mut r = rng(50);
    for policy in POLICIES {
        let build = build_liouvillian(&h, &h, &baths, policy, &BuildOptions::default()).unwrap();
        let scale = fro(&build.total);
        assert!(trace_defect(&build.total, 4) < 1e-12 * scale);
        for _ in 0..5 {
            let rho = random_density(h.space(), &mut r);
            let out = apply_superop(&build.total, &rho).unwrap();
            assert!(out.trace().norm() < 1e-12 * scale);
            assert!(out.hermiticity_residual() < 1e-12 * scale);
        }
    }
}

#[test]
fn single_qubit_rates_and_shift() {
    let b = BathSpec::new("b", 0.5, 0.1, 0.1, 100.0, vec![pauli(Pauli::X)]).unwrap();
    let h = &pauli(Pauli::Z) * 0.5;
    let build = build_liouvillian(&h, &h, std::slice::from_ref(&b), SecularPolicy::FullSecular, &BuildOptions::default()).unwrap();
    assert_eq!((build.kept_pairs, build.dropped_pairs), (2, 2));
    let a2 = 0.01;
    let c = &b.coefficients;
    let sp = pauli(Pauli::Plus);
    let sm = pauli(Pauli::Minus);
    let expect_ls = &(&(&sp * &sm) * (a2 * c.shift_integral(1.0))) + &(&(&sm * &sp) * (a2 * c.shift_integral(-1.0)));
    assert!(rel_diff(build.lamb_shift.matrix(), expect_ls.matrix()) < 1e-12);

    // populations decay at γ(1) + γ(−1)
    let down = 2.0 * PI * a2 * i_of_omega(1.0, &b);
    let up = 2.0 * PI * a2 * i_of_omega(-1.0, &b);
    let excited = &sp * &sm;
    let out = apply_superop(&build.total, &excited).unwrap();
    assert!((out.matrix()[(0, 0)].re + down).abs() < 1e-14);
    assert!((out.matrix()[(1, 1)].re - down).abs() < 1e-14);
    let ground = &sm * &sp;
    let out = apply_superop(&build.total, &ground).unwrap();
    assert!((out.matrix()[(0, 0)].re - up).abs() < 1e-14);

    // Redfield on a single qubit with σx coupling keeps the (ω, −ω) pairs
    let red = build_liouvillian(&h, &h, std::slice::from_ref(&b), SecularPolicy::Redfield, &BuildOptions::default()).unwrap();
    assert_eq!((red.kept_pairs, red.dropped_pairs), (4, 0));
}

#[test]
fn single_resonator_lindblad_form() {
    for n in [3, 5] {
        let a = annihilation(n).unwrap();
        let ad = a.adjoint();
        let h = &(&ad * &a) * 1.5;
        let b = BathSpec::new("b", 0.7, 0.02, 0.1, 100.0, vec![&a + &ad]).unwrap();
        let build = build_liouvillian(&h, &h, std::slice::from_ref(&b), SecularPolicy::FullSecular, &BuildOptions::default()).unwrap();
        let gd = 2.0 * PI * 4e-4 * i_of_omega(1.5, &b);
        let gu = 2.0 * PI * 4e-4 * i_of_omega(-1.5, &b);
        let half = faer::Scale(c64::new(0.5, 0.0));
        let lind = |x: &Operator, rate: f64| {
            (sandwich(x, &x.adjoint()).unwrap() - super_anticommutator(&(&x.adjoint() * x)) * half)
                * faer::Scale(c64::new(rate, 0.0))
        };
        let expect = lind(&a, gd) + lind(&ad, gu);
        assert!(rel_diff(&build.per_bath[0].matrix, &expect) < 1e-12, "N={n}");
    }
}

#[test]
fn local_generator_against_explicit_form() {
    let p = ChainParams { n: 3, g1: 0.03, g2: 0.04, g12: 0.02, ..ChainParams::default() };
    let explicit = local_explicit_liouvillian(&p, true).unwrap();
    for policy in [SecularPolicy::FullSecular, SecularPolicy::Partial(1e4), SecularPolicy::Unified(0.01)] {
        let (_, build) = build_chain(&p, policy, Mode::Local, &BuildOptions::default()).unwrap();
        assert!(build.is_local);
        assert!(rel_diff(&build.total, &explicit.total) < 1e-10, "{policy:?}");
        assert!(rel_diff(build.lamb_shift.matrix(), explicit.lamb_shift.matrix()) < 1e-10);
    }
    // local Redfield also carries the (Ω, −Ω) cross terms
    let (_, red) = build_chain(&p, SecularPolicy::Redfield, Mode::Local, &BuildOptions::default()).unwrap();
    assert!(rel_diff(&red.total, &explicit.total) > 1e-6);
}

#[test]
fn unified_metadata() {
    let p = ChainParams { n: 2, g1: 0.01, g2: 0.01, g12: 0.01, omega_l: 1.5, omega_r: 1.5, ..ChainParams::default() };
    let (_, build) = build_chain(&p, SecularPolicy::Unified(0.05), Mode::Global, &no_lamb()).unwrap();
    let cl = build.clusters.as_ref().unwrap();
    assert!(cl.len() > 1);
    assert!(build.chaining.is_empty());
    let (_, fsa) = build_chain(&p, SecularPolicy::FullSecular, Mode::Global, &no_lamb()).unwrap();
    assert!(fsa.clusters.is_none());
    assert!(!fsa.is_local);
}

#[test]
fn energy_balance_with_lamb_shift() {
    let p = ChainParams { n: 2, ..ChainParams::default() };
    let opts = HeatFlowOptions { energy: EnergyOperator::SystemWithLambShift, ..HeatFlowOptions::default() };
    for policy in [SecularPolicy::Redfield, SecularPolicy::FullSecular, SecularPolicy::Partial(1e4), SecularPolicy::Unified(0.01)] {
        let (sys, build) = build_chain(&p, policy, Mode::Global, &BuildOptions::default()).unwrap();
        let ss = steady_state(&build, 1e-10).unwrap();
        let flow = heat_flow_with(&sys.h_full, &build, &ss.rho, &opts).unwrap();
        assert!(flow.relative_imbalance() < 1e-10, "{policy:?}: {}", flow.relative_imbalance());
        assert!(flow.get("L").unwrap() > 0.0);
    }
}

#[test]
fn build_validation() {
    let h = &pauli(Pauli::Z) * 0.5;
    let b = BathSpec::new("b", 0.5, 0.1, 0.1, 100.0, vec![pauli(Pauli::X)]).unwrap();
    let bad = pauli(Pauli::Plus);
    assert!(build_liouvillian(&bad, &bad, std::slice::from_ref(&b), SecularPolicy::Redfield, &BuildOptions::default()).is_err());
    assert!(build_liouvillian(&h, &h, std::slice::from_ref(&b), SecularPolicy::Unified(-1.0), &BuildOptions::default()).is_err());
    let big = Operator::identity(&CompositeSpace::single(3).unwrap());
    assert!(build_liouvillian(&big, &big, std::slice::from_ref(&b), SecularPolicy::Redfield, &BuildOptions::default()).is_err());
}
