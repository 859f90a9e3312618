mod common;

use common::*;
use meqforge_core::bath::BathSpec;
use meqforge_core::liouvillian::{build_liouvillian, BuildOptions};
use meqforge_core::models::{build_chain, chain_number_operator, ChainParams, Mode};
use meqforge_core::operators::*;
use meqforge_core::secular::SecularPolicy;
use meqforge_core::solve::steady_state;
use meqforge_core::symmetry::*;
use meqforge_core::{c64, Error, Mat};

/// Two two-level bosons with hopping, each attached to its own bath.
fn boson_pair(policy: SecularPolicy) -> (Operator, Operator, Mat<c64>) {
    let space = CompositeSpace::new(vec![2, 2]).unwrap();
    let a = annihilation(2).unwrap();
    let a1 = embed(&a, 0, &space).unwrap();
    let a2 = embed(&a, 1, &space).unwrap();
    let n = &(&a1.adjoint() * &a1) + &(&a2.adjoint() * &a2);
    let hop = &(&a1.adjoint() * &a2) + &(&a2.adjoint() * &a1);
    let h = &n + &(&hop * 0.1);
    let baths = vec![
        BathSpec::new("1", 0.6, 0.05, 0.1, 100.0, vec![&a1 + &a1.adjoint()]).unwrap(),
        BathSpec::new("2", 0.2, 0.05, 0.1, 100.0, vec![&a2 + &a2.adjoint()]).unwrap(),
    ];
    let build = build_liouvillian(&h, &h, &baths, policy, &BuildOptions::default()).unwrap();
    (h, n, build.total)
}

fn ket_bra(ket: usize, bra: usize) -> usize {
    ket * 4 + bra
}

#[test]
fn commutator_superoperator() {
    let space = CompositeSpace::new(vec![2, 3]).unwrap();
    let id = Operator::identity(&space);
    assert_eq!(fro(&superop_adjoint(&id)), 0.0);

    let mut r = rng(31);
    let j = random_hermitian(&space, &mut r);
    let rho = random_density(&space, &mut r);
    let out = apply_superop(&superop_adjoint(&j), &rho).unwrap();
    let direct = &(&j * &rho) - &(&rho * &j);
    assert!(rel_diff(out.matrix(), direct.matrix()) < 1e-14);

    // eigenvalues of [N, ·] for two bosons are n + m − (n′ + m′)
    let (_, n, _) = boson_pair(SecularPolicy::FullSecular);
    let sup = superop_adjoint(&n);
    let mut diag: Vec<f64> = (0..16).map(|k| sup[(k, k)].re).collect();
    diag.sort_by(f64::total_cmp);
    let mut expect = Vec::new();
    for i in 0..4usize {
        for j in 0..4usize {
            expect.push((i.count_ones() as f64) - (j.count_ones() as f64));
        }
    }
    expect.sort_by(f64::total_cmp);
    assert_eq!(diag, expect);
}

#[test]
fn weak_symmetry_checks() {
    let (h, n, l) = boson_pair(SecularPolicy::FullSecular);
    for j in [&h, &n] {
        let dense = check_weak_symmetry(&l, &superop_adjoint(j), 1e-9).unwrap();
        let fast = check_operator_symmetry(&l, j, 1e-9).unwrap();
        assert!(dense.symmetric && fast.symmetric);
        assert!((dense.residual - fast.residual).abs() < 1e-12);
    }
    let x = &pauli(Pauli::X);
    let space = CompositeSpace::new(vec![2, 2]).unwrap();
    let x1 = embed(x, 0, &space).unwrap();
    let c = check_operator_symmetry(&l, &x1, 1e-9).unwrap();
    assert!(!c.symmetric && c.residual > 1e-3);
    assert!(check_weak_symmetry(&l, &Mat::zeros(4, 4), 1e-9).is_err());
    assert!(check_operator_symmetry(&l, &pauli(Pauli::Plus), 1e-9).is_err());
}

#[test]
fn chain_symmetries() {
    let p = ChainParams { n: 2, ..ChainParams::default() };
    let (sys, fsa) = build_chain(&p, SecularPolicy::FullSecular, Mode::Global, &BuildOptions::default()).unwrap();
    let number = chain_number_operator(&sys).unwrap();
    assert!(check_operator_symmetry(&fsa.total, &sys.h_full, 1e-9).unwrap().symmetric);
    assert!(check_operator_symmetry(&fsa.total, &number, 1e-9).unwrap().symmetric);

    let (_, psa) = build_chain(&p, SecularPolicy::Partial(1e4), Mode::Global, &BuildOptions::default()).unwrap();
    assert!(check_operator_symmetry(&psa.total, &number, 1e-9).unwrap().symmetric);
    let broken = check_operator_symmetry(&psa.total, &sys.h_full, 1e-9).unwrap();
    assert!(!broken.symmetric, "{}", broken.residual);
    assert!(matches!(block_transform(&psa.total, &sys.h_full, 1e-9), Err(Error::SymmetryBroken { .. })));
}

#[test]
fn boson_pair_blocks() {
    let (_, n, l) = boson_pair(SecularPolicy::FullSecular);
    let dec = block_transform(&l, &n, 1e-9).unwrap();
    assert_eq!(dec.block_labels.len(), 5);
    for (got, want) in dec.block_labels.iter().zip([-2.0, -1.0, 0.0, 1.0, 2.0]) {
        assert!((got - want).abs() < 1e-12);
    }
    let sizes: Vec<usize> = dec.block_ranges.iter().map(|r| r.len()).collect();
    assert_eq!(sizes, vec![1, 4, 6, 4, 1]);
    assert_eq!(sizes.iter().sum::<usize>(), 16);
    assert!(dec.off_block_mass < 1e-9);

    // |01⟩⊗|00⟩, |10⟩⊗|00⟩, |11⟩⊗|01⟩, |11⟩⊗|10⟩
    let k = dec.block_with_label(1.0, 1e-9).unwrap();
    let basis = dec.block_basis(k);
    let expect = [ket_bra(0b01, 0b00), ket_bra(0b10, 0b00), ket_bra(0b11, 0b01), ket_bra(0b11, 0b10)];
    for c in 0..basis.ncols() {
        let inside: f64 = expect.iter().map(|&e| basis[(e, c)].norm_sqr()).sum();
        assert!((inside - 1.0).abs() < 1e-12);
    }

    let u = &dec.transform_u;
    assert!(fro(&(u.adjoint() * u - Mat::<c64>::identity(16, 16))) < 1e-10);
    assert!(fro(&(u.adjoint() * &l * u - dec.block_diagonal())) < 1e-9 * fro(&l));

    // vec(𝟙) lies in the zero block
    let k0 = dec.block_with_label(0.0, 1e-9).unwrap();
    let b0 = dec.block_basis(k0);
    let id: Vec<c64> = (0..16).map(|k| if k / 4 == k % 4 { c64::new(0.5, 0.0) } else { c64::new(0.0, 0.0) }).collect();
    let mut proj_norm = 0.0;
    for c in 0..b0.ncols() {
        let ip: c64 = (0..16).map(|k| b0[(k, c)].conj() * id[k]).sum();
        proj_norm += ip.norm_sqr();
    }
    assert!((proj_norm - 1.0).abs() < 1e-12);
}

#[test]
fn spectrum_is_preserved() {
    let (_, n, l) = boson_pair(SecularPolicy::FullSecular);
    let dec = block_transform(&l, &n, 1e-9).unwrap();
    let full = l.eigenvalues().unwrap();
    let mut parts = Vec::new();
    for b in &dec.blocks {
        parts.extend(b.eigenvalues().unwrap());
    }
    assert_eq!(full.len(), parts.len());
    // greedy nearest matching of the two multisets
    let mut used = vec![false; parts.len()];
    for a in &full {
        let (k, dist) = parts
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, b)| (k, (a - b).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        assert!(dist < 1e-8, "{a}: {dist}");
        used[k] = true;
    }
}

#[test]
fn identity_symmetry_gives_one_block() {
    let (_, _, l) = boson_pair(SecularPolicy::Redfield);
    let id = Operator::identity(&CompositeSpace::new(vec![2, 2]).unwrap());
    let dec = block_transform(&l, &id, 1e-9).unwrap();
    assert_eq!(dec.blocks.len(), 1);
    assert!(rel_diff(&dec.blocks[0], &(dec.transform_u.adjoint() * &l * &dec.transform_u)) < 1e-14);
    assert!(rel_diff(&(&dec.transform_u * &dec.blocks[0] * dec.transform_u.adjoint()), &l) < 1e-12);
}

#[test]
fn zero_block_steady_state() {
    let p = ChainParams { n: 3, ..ChainParams::default() };
    for policy in [SecularPolicy::FullSecular, SecularPolicy::Partial(1e4)] {
        let (sys, build) = build_chain(&p, policy, Mode::Global, &BuildOptions::default()).unwrap();
        let number = chain_number_operator(&sys).unwrap();
        let dec = block_transform(&build.total, &number, 1e-9).unwrap();
        assert!(dec.off_block_mass < 1e-9);
        let from_block = dec.steady_state_from_zero_block().unwrap();
        let full = steady_state(&build, 1e-10).unwrap();
        assert!(trace_distance(&from_block, &full.rho) < 1e-9, "{policy:?}");
    }
}
