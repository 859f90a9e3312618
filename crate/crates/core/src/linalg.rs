//! Dense kernels shared by the superoperator code.
//!
//! A superoperator column holds a row-stacked d×d matrix Y, which read as a
//! column-major d×d block is Y^T. With that view (A⊗B)·vec(Y) becomes
//! Z ↦ B Z A^T on the block Z = Y^T.

use alloc::vec::Vec;
use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatMut, MatRef, Par};

use crate::math::{c64, ZERO};

pub(crate) fn kron(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Mat<c64> {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    let mut out = Mat::<c64>::zeros(ar * br, ac * bc);
    for j in 0..ac {
        for i in 0..ar {
            let s = a[(i, j)];
            if s == ZERO {
                continue;
            }
            for l in 0..bc {
                for k in 0..br {
                    out[(i * br + k, j * bc + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

pub(crate) fn scaled(m: MatRef<'_, c64>, s: c64) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s)
}

/// M ← (V⊗V*)·M·(V⊗V*)†, the superoperator image of the basis change V.
///
/// M is treated as a tensor M[a,b,c,e] with rows (a,b) and columns (c,e);
/// each index in turn is brought to unit stride and transformed by a batch
/// of d² × d by d × d products.
pub(crate) fn kron_conjugate(m: &mut Mat<c64>, v: MatRef<'_, c64>) {
    let n = m.nrows();
    debug_assert!(m.ncols() == n && v.nrows() * v.nrows() == n);
    let mut x = Vec::with_capacity(n * n);
    for col in 0..n {
        x.extend_from_slice(m.col_as_slice(col));
    }
    let mut scratch = Vec::new();
    kron_conjugate_buf(&mut x, &mut scratch, v);
    for col in 0..n {
        m.col_as_slice_mut(col).copy_from_slice(&x[col * n..(col + 1) * n]);
    }
}

/// [`kron_conjugate`] on a column-major d²×d² buffer; `scratch` is resized
/// as needed and may be reused between calls.
pub(crate) fn kron_conjugate_buf(x: &mut [c64], scratch: &mut Vec<c64>, v: MatRef<'_, c64>) {
    let d = v.nrows();
    let n = d * d;
    assert_eq!(x.len(), n * n);
    let vt = v.transpose().to_owned();
    let vh = v.adjoint().to_owned();
    // offset of (a,b,c,e) is b + d·a + d²·e + d³·c
    scratch.resize(n * n, ZERO);
    let y = &mut scratch[..];
    let one = c64::new(1.0, 0.0);
    // one index at unit stride: out = U·in, computed as inᵀ·Uᵀ per d² × d chunk
    let unit_stride = |src: &[c64], dst: &mut [c64], ut: MatRef<'_, c64>| {
        for (s, t) in src.chunks_exact(n * d).zip(dst.chunks_exact_mut(n * d)) {
            matmul(
                MatMut::from_column_major_slice_mut(t, d, n).transpose_mut(),
                Accum::Replace,
                MatRef::from_column_major_slice(s, d, n).transpose(),
                ut,
                one,
                Par::Seq,
            );
        }
    };

    unit_stride(x, y, vh.as_ref());
    transpose_blocks(y, x, d);
    unit_stride(x, y, vt.as_ref());
    // e, stride d²: each c-slab is a contiguous d² × d block, times Vᵀ
    for (s, t) in y.chunks_exact(n * d).zip(x.chunks_exact_mut(n * d)) {
        matmul(
            MatMut::from_column_major_slice_mut(t, n, d),
            Accum::Replace,
            MatRef::from_column_major_slice(s, n, d),
            vt.as_ref(),
            one,
            Par::Seq,
        );
    }
    // c, stride d³: rows of d² at a time, times V† on the right
    let len = (d - 1) * n * d + n;
    for k in 0..d {
        matmul(
            MatMut::from_column_major_slice_with_stride_mut(&mut y[k * n..k * n + len], n, d, n * d),
            Accum::Replace,
            MatRef::from_column_major_slice_with_stride(&x[k * n..k * n + len], n, d, n * d),
            vh.as_ref(),
            one,
            Par::Seq,
        );
    }
    transpose_blocks(y, x, d);
}

/// dst[a + d·b + d²·k] = src[b + d·a + d²·k].
fn transpose_blocks(src: &[c64], dst: &mut [c64], d: usize) {
    let n = d * d;
    for (s, t) in src.chunks_exact(n).zip(dst.chunks_exact_mut(n)) {
        for a in 0..d {
            for b in 0..d {
                t[a + d * b] = s[b + d * a];
            }
        }
    }
}

pub(crate) fn fro_norm(m: MatRef<'_, c64>) -> f64 {
    m.norm_l2()
}

pub(crate) fn matvec(m: MatRef<'_, c64>, x: &[c64]) -> Vec<c64> {
    let mut out = alloc::vec![ZERO; m.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        if xj == ZERO {
            continue;
        }
        let col = m.col(j);
        for (i, o) in out.iter_mut().enumerate() {
            *o += col[i] * xj;
        }
    }
    out
}

/// Row-stacked vector to a d×d matrix.
pub(crate) fn unstack(v: &[c64], d: usize) -> Mat<c64> {
    Mat::from_fn(d, d, |r, c| v[r * d + c])
}

/// d×d matrix to its row-stacked vector.
pub(crate) fn stack(m: MatRef<'_, c64>) -> Vec<c64> {
    let d = m.nrows();
    let mut v = Vec::with_capacity(d * m.ncols());
    for r in 0..d {
        for c in 0..m.ncols() {
            v.push(m[(r, c)]);
        }
    }
    v
}
