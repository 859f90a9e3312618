//! Weak symmetries of a Liouvillian and the block decomposition they induce.

use alloc::format;
use alloc::vec::Vec;
use core::ops::Range;

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatMut, MatRef, Par};

use crate::error::{Error, Result};
use crate::linalg::{self, fro_norm};
use crate::math::{c64, cplx, ZERO};
use crate::operators::{super_commutator, Operator};
use crate::secular::single_linkage;
use crate::solve::augmented_lstsq;
use crate::spectral::diagonalize;

/// Superoperator of [J, ·].
pub fn superop_adjoint(j: &Operator) -> Mat<c64> {
    super_commutator(j)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetryCheck {
    pub symmetric: bool,
    /// ‖𝓛𝒥 − 𝒥𝓛‖_F / ‖𝓛‖_F.
    pub residual: f64,
}

fn relative(num: f64, l: MatRef<'_, c64>) -> f64 {
    let n = fro_norm(l);
    if n > 0.0 {
        num / n
    } else {
        num
    }
}

/// Dense commutator test between two superoperators.
pub fn check_weak_symmetry(l: &Mat<c64>, jsup: &Mat<c64>, tol: f64) -> Result<SymmetryCheck> {
    if l.nrows() != jsup.nrows() || l.ncols() != jsup.ncols() || l.nrows() != l.ncols() {
        return Err(Error::Dimension(format!(
            "superoperators of shapes {}x{} and {}x{}",
            l.nrows(),
            l.ncols(),
            jsup.nrows(),
            jsup.ncols()
        )));
    }
    let c = l * jsup - jsup * l;
    let residual = relative(c.norm_l2(), l.as_ref());
    Ok(SymmetryCheck { symmetric: residual < tol, residual })
}

/// M ← [J, ·]∘M, column by column: each column block Z becomes Z Jᵀ − Jᵀ Z.
fn apply_commutator_left(m: &mut Mat<c64>, j: MatRef<'_, c64>) {
    let d = j.nrows();
    let mut tmp = Mat::<c64>::zeros(d, d);
    let one = cplx(1.0, 0.0);
    for col in 0..m.ncols() {
        let slice = m.col_as_slice_mut(col);
        {
            let z = MatRef::from_column_major_slice(&*slice, d, d);
            matmul(tmp.as_mut(), Accum::Replace, z, j.transpose(), one, Par::Seq);
            matmul(tmp.as_mut(), Accum::Add, j.transpose(), z, -one, Par::Seq);
        }
        let mut z = MatMut::from_column_major_slice_mut(slice, d, d);
        z.copy_from(&tmp);
    }
}

/// Commutator test against [J, ·] for a Hermitian J, without forming the
/// d²×d² superoperator of J.
pub fn check_operator_symmetry(l: &Mat<c64>, j: &Operator, tol: f64) -> Result<SymmetryCheck> {
    let d = j.dim();
    if l.nrows() != d * d || l.ncols() != d * d {
        return Err(Error::Dimension(format!("generator is {}x{}, operator dimension {d}", l.nrows(), l.ncols())));
    }
    if !j.is_hermitian(1e-10) {
        return Err(Error::Validation("symmetry generator is not Hermitian".into()));
    }
    let jm = j.matrix().as_ref();
    let mut left = l.clone();
    apply_commutator_left(&mut left, jm);
    // 𝓛𝒥 = (𝒥𝓛†)† since 𝒥 is self-adjoint for Hermitian J
    let mut right = l.adjoint().to_owned();
    apply_commutator_left(&mut right, jm);
    let diff = right.adjoint() - &left;
    let residual = relative(diff.norm_l2(), l.as_ref());
    Ok(SymmetryCheck { symmetric: residual < tol, residual })
}

/// Block-diagonal form U†𝓛U of a generator with a weak symmetry.
#[derive(Clone, Debug)]
pub struct BlockDecomposition {
    /// Columns are vec(|v_i⟩⟨v_j|) for eigenvectors v of J, grouped by label.
    pub transform_u: Mat<c64>,
    /// Eigenvalue n_i − n_j of [J, ·] for each block (group mean).
    pub block_labels: Vec<f64>,
    pub block_ranges: Vec<Range<usize>>,
    pub blocks: Vec<Mat<c64>>,
    /// ‖U†𝓛U − blockdiag‖_F / ‖𝓛‖_F.
    pub off_block_mass: f64,
    pub symmetry_residual: f64,
    dim: usize,
    space: crate::operators::CompositeSpace,
}

/// Groups the eigenbasis of [J, ·] by eigenvalue and rotates 𝓛 into it.
/// Refuses when 𝓛 does not commute with [J, ·] within `tol`.
pub fn block_transform(l: &Mat<c64>, j: &Operator, tol: f64) -> Result<BlockDecomposition> {
    let check = check_operator_symmetry(l, j, tol)?;
    if !check.symmetric {
        return Err(Error::SymmetryBroken { residual: check.residual });
    }
    let d = j.dim();
    let eig = diagonalize(j, None)?;
    let n = &eig.energies;
    let span = n[d - 1] - n[0];
    let label_tol = if span > 0.0 { 1e-8 * span } else { 1e-8 };
    let mut order: Vec<usize> = (0..d * d).collect();
    let label = |p: usize| n[p / d] - n[p % d];
    order.sort_by(|&a, &b| label(a).total_cmp(&label(b)).then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&p| label(p)).collect();
    let block_ranges = single_linkage(&sorted, |gap| gap <= label_tol);
    let block_labels: Vec<f64> = block_ranges
        .iter()
        .map(|r| sorted[r.clone()].iter().sum::<f64>() / r.len() as f64)
        .collect();
    for (k, r) in block_ranges.iter().enumerate() {
        let width = sorted[r.end - 1] - sorted[r.start];
        let gap_below = if k > 0 { sorted[r.start] - sorted[r.start - 1] } else { f64::INFINITY };
        let gap_above = if r.end < sorted.len() { sorted[r.end] - sorted[r.end - 1] } else { f64::INFINITY };
        if width >= 0.5 * gap_below.min(gap_above) {
            return Err(Error::Consistency(format!(
                "label group around {} has width {width:e}, comparable to its separation",
                block_labels[k]
            )));
        }
    }

    let mut rotated = l.clone();
    let vh = eig.vectors.adjoint().to_owned();
    linalg::kron_conjugate(&mut rotated, vh.as_ref());
    let mut group_of = alloc::vec![0usize; d * d];
    for (g, r) in block_ranges.iter().enumerate() {
        for &p in &order[r.clone()] {
            group_of[p] = g;
        }
    }
    let mut off = 0.0;
    for c in 0..d * d {
        for r in 0..d * d {
            if group_of[r] != group_of[c] {
                off += rotated[(r, c)].norm_sqr();
            }
        }
    }
    let blocks = block_ranges
        .iter()
        .map(|r| {
            let idx = &order[r.clone()];
            Mat::from_fn(idx.len(), idx.len(), |a, b| rotated[(idx[a], idx[b])])
        })
        .collect();
    let v = &eig.vectors;
    let transform_u = Mat::from_fn(d * d, d * d, |row, k| {
        let p = order[k];
        let (i, jj) = (p / d, p % d);
        v[(row / d, i)] * v[(row % d, jj)].conj()
    });
    Ok(BlockDecomposition {
        transform_u,
        block_labels,
        block_ranges,
        blocks,
        off_block_mass: relative(crate::math::sqrt(off), l.as_ref()),
        symmetry_residual: check.residual,
        dim: d,
        space: j.space().clone(),
    })
}

impl BlockDecomposition {
    /// Index of the block whose label is within `tol` of `label`.
    pub fn block_with_label(&self, label: f64, tol: f64) -> Option<usize> {
        self.block_labels.iter().position(|&l| (l - label).abs() <= tol)
    }

    /// Columns of U spanning block `k`.
    pub fn block_basis(&self, k: usize) -> Mat<c64> {
        let r = self.block_ranges[k].clone();
        self.transform_u.subcols(r.start, r.len()).to_owned()
    }

    /// Block-diagonal matrix assembled from the blocks.
    pub fn block_diagonal(&self) -> Mat<c64> {
        let n = self.dim * self.dim;
        let mut m = Mat::<c64>::zeros(n, n);
        for (b, r) in self.blocks.iter().zip(&self.block_ranges) {
            for c in 0..r.len() {
                for a in 0..r.len() {
                    m[(r.start + a, r.start + c)] = b[(a, c)];
                }
            }
        }
        m
    }

    /// Stationary state computed inside the zero-label block alone.
    pub fn steady_state_from_zero_block(&self) -> Result<Operator> {
        let k = self
            .block_with_label(0.0, 1e-8)
            .ok_or_else(|| Error::Consistency("no zero-label block".into()))?;
        let basis = self.block_basis(k);
        let d = self.dim;
        let m = basis.ncols();
        // trace of the state vec(ρ) = basis·x is Σ_i (basis·x)_{(i,i)}
        let trace_row: Vec<c64> = (0..m).map(|c| (0..d).map(|i| basis[(i * d + i, c)]).sum()).collect();
        let block = &self.blocks[k];
        let residual = |x: &[c64]| linalg::matvec(block.as_ref(), x);
        let x = augmented_lstsq(block.as_ref(), &trace_row, &residual)?;
        let full = linalg::matvec(basis.as_ref(), &x);
        let rho = Operator::new(self.space.clone(), linalg::unstack(&full, d))?.hermitian_part();
        let tr = rho.trace();
        if tr == ZERO {
            return Err(Error::Numerical("zero-trace block solution".into()));
        }
        Ok(rho.scale(tr.inv()))
    }
}
