//! Operators on composite Hilbert spaces and superoperator building blocks.
//!
//! Density matrices are vectorized by ROW stacking: entry `r·d + c` of the
//! vector holds element `(r, c)`. Under this convention the map X ↦ A X B is
//! the Kronecker product A ⊗ Bᵀ, and every superoperator in the crate is
//! written against it.

use alloc::format;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use faer::{Col, Mat};

use crate::error::{Error, Result};
use crate::linalg;
use crate::math::{c64, cplx, floor, sqrt, ONE, ZERO};

/// Ordered list of subsystem dimensions. The leftmost subsystem is the
/// leftmost Kronecker factor.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CompositeSpace {
    dims: Vec<usize>,
    total_dim: usize,
}

impl CompositeSpace {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Dimension("a space needs at least one subsystem".into()));
        }
        if let Some((i, &d)) = dims.iter().enumerate().find(|(_, &d)| d < 2) {
            return Err(Error::Dimension(format!("subsystem {i} has dimension {d} (< 2)")));
        }
        let total_dim = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Dimension("total dimension overflows".into()))?;
        Ok(Self { dims, total_dim })
    }

    /// A space made of a single subsystem.
    pub fn single(dim: usize) -> Result<Self> {
        Self::new(alloc::vec![dim])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }
}

/// Dense complex operator on a composite space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    space: CompositeSpace,
    matrix: Mat<c64>,
}

impl Operator {
    pub fn new(space: CompositeSpace, matrix: Mat<c64>) -> Result<Self> {
        let d = space.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::Dimension(format!(
                "matrix is {}x{}, space has dimension {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { space, matrix })
    }

    /// Wraps a square matrix as an operator on a single subsystem.
    pub fn from_matrix(matrix: Mat<c64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Dimension(format!(
                "matrix is {}x{}, expected square",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Self::new(CompositeSpace::single(matrix.nrows())?, matrix)
    }

    pub fn zeros(space: &CompositeSpace) -> Self {
        let d = space.total_dim();
        Self { space: space.clone(), matrix: Mat::zeros(d, d) }
    }

    pub fn identity(space: &CompositeSpace) -> Self {
        let d = space.total_dim();
        Self { space: space.clone(), matrix: Mat::identity(d, d) }
    }

    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    pub fn matrix(&self) -> &Mat<c64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Mat<c64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.space.total_dim()
    }

    pub fn adjoint(&self) -> Self {
        Self { space: self.space.clone(), matrix: self.matrix.adjoint().to_owned() }
    }

    pub fn scale(&self, s: c64) -> Self {
        Self { space: self.space.clone(), matrix: Mat::from_fn(self.dim(), self.dim(), |i, j| self.matrix[(i, j)] * s) }
    }

    pub fn trace(&self) -> c64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)]).sum()
    }

    pub fn norm_fro(&self) -> f64 {
        self.matrix.norm_l2()
    }

    /// ‖A − A†‖_F.
    pub fn hermiticity_residual(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).norm_l2()
    }

    /// Hermitian within `rel_tol · ‖A‖_F`.
    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.hermiticity_residual() <= rel_tol * self.norm_fro()
    }

    /// (A + A†)/2.
    pub fn hermitian_part(&self) -> Self {
        let m = &self.matrix;
        let d = self.dim();
        Self {
            space: self.space.clone(),
            matrix: Mat::from_fn(d, d, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5),
        }
    }

    /// Tensor product; the result lives on the concatenated space.
    pub fn kron(&self, other: &Operator) -> Result<Self> {
        let mut dims = self.space.dims.clone();
        dims.extend_from_slice(&other.space.dims);
        Self::new(CompositeSpace::new(dims)?, linalg::kron(self.matrix.as_ref(), other.matrix.as_ref()))
    }

    pub fn ensure_same_space(&self, other: &Operator) -> Result<()> {
        if self.space != other.space {
            return Err(Error::Dimension(format!(
                "operators live on different spaces {:?} and {:?}",
                self.space.dims, other.space.dims
            )));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Operator) -> Result<Self> {
        self.ensure_same_space(other)?;
        Ok(Self { space: self.space.clone(), matrix: &self.matrix + &other.matrix })
    }

    pub fn try_mul(&self, other: &Operator) -> Result<Self> {
        self.ensure_same_space(other)?;
        Ok(Self { space: self.space.clone(), matrix: &self.matrix * &other.matrix })
    }
}

// Operator arithmetic panics when spaces differ; use the `try_` forms when
// the spaces are not known to agree.
impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.try_add(rhs).expect("operator spaces differ")
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.ensure_same_space(rhs).expect("operator spaces differ");
        Operator { space: self.space.clone(), matrix: &self.matrix - &rhs.matrix }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.try_mul(rhs).expect("operator spaces differ")
    }
}

impl Mul<c64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: c64) -> Operator {
        self.scale(rhs)
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale(cplx(rhs, 0.0))
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale(cplx(-1.0, 0.0))
    }
}

/// A row-stacked density matrix |ρ⟩⟩.
#[derive(Clone, Debug)]
pub struct StateVectorized {
    space: CompositeSpace,
    vec: Col<c64>,
}

impl StateVectorized {
    /// Wraps raw row-stacked data; the length must be the square of the
    /// space dimension.
    pub fn new(space: CompositeSpace, vec: Col<c64>) -> Result<Self> {
        let d = space.total_dim();
        if vec.nrows() != d * d {
            return Err(Error::Dimension(format!("vector of length {} is not {d}²", vec.nrows())));
        }
        Ok(Self { space, vec })
    }

    /// Infers a single-subsystem space from the length.
    pub fn from_values(values: &[c64]) -> Result<Self> {
        let n = values.len();
        let d = floor(sqrt(n as f64) + 0.5) as usize;
        if d * d != n {
            return Err(Error::Dimension(format!("length {n} is not a perfect square")));
        }
        Self::new(CompositeSpace::single(d)?, Col::from_fn(n, |i| values[i]))
    }

    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    pub fn vec(&self) -> &Col<c64> {
        &self.vec
    }
}

/// Row-stacks `rho`.
pub fn vectorize(rho: &Operator) -> StateVectorized {
    let d = rho.dim();
    let m = rho.matrix();
    StateVectorized { space: rho.space.clone(), vec: Col::from_fn(d * d, |k| m[(k / d, k % d)]) }
}

/// Inverse of [`vectorize`].
pub fn unvectorize(v: &StateVectorized) -> Operator {
    let d = v.space.total_dim();
    Operator { space: v.space.clone(), matrix: Mat::from_fn(d, d, |r, c| v.vec[r * d + c]) }
}

/// Annihilation operator truncated to `n` levels.
pub fn annihilation(n: usize) -> Result<Operator> {
    if n < 2 {
        return Err(Error::Dimension(format!("truncation {n} < 2")));
    }
    let m = Mat::from_fn(n, n, |i, j| if j == i + 1 { cplx(sqrt(j as f64), 0.0) } else { ZERO });
    Operator::from_matrix(m)
}

/// Two-level operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

/// Pauli and ladder matrices in the basis (|e⟩, |g⟩): σ_z|e⟩ = |e⟩ and
/// σ_+ = |e⟩⟨g|.
pub fn pauli(kind: Pauli) -> Operator {
    let o = ZERO;
    let l = ONE;
    let i = cplx(0.0, 1.0);
    let entries = match kind {
        Pauli::X => [[o, l], [l, o]],
        Pauli::Y => [[o, -i], [i, o]],
        Pauli::Z => [[l, o], [o, -l]],
        Pauli::Plus => [[o, l], [o, o]],
        Pauli::Minus => [[o, o], [l, o]],
    };
    Operator::from_matrix(Mat::from_fn(2, 2, |r, c| entries[r][c])).expect("2x2 is valid")
}

/// 𝟙 ⊗ … ⊗ local ⊗ … ⊗ 𝟙 with `local` at position `site`.
pub fn embed(local: &Operator, site: usize, space: &CompositeSpace) -> Result<Operator> {
    let dims = space.dims();
    if site >= dims.len() {
        return Err(Error::SiteOutOfRange { site, len: dims.len() });
    }
    if local.dim() != dims[site] {
        return Err(Error::Dimension(format!(
            "local operator has dimension {}, site {site} has {}",
            local.dim(),
            dims[site]
        )));
    }
    let left: usize = dims[..site].iter().product();
    let right: usize = dims[site + 1..].iter().product();
    let n = dims[site];
    let d = space.total_dim();
    let lm = local.matrix();
    let mut m = Mat::<c64>::zeros(d, d);
    for a in 0..left {
        for i in 0..n {
            for j in 0..n {
                let v = lm[(i, j)];
                if v == ZERO {
                    continue;
                }
                for b in 0..right {
                    m[((a * n + i) * right + b, (a * n + j) * right + b)] = v;
                }
            }
        }
    }
    Operator::new(space.clone(), m)
}

/// Superoperator of X ↦ A X B, i.e. A ⊗ Bᵀ.
pub fn sandwich(a: &Operator, b: &Operator) -> Result<Mat<c64>> {
    a.ensure_same_space(b)?;
    Ok(linalg::kron(a.matrix().as_ref(), b.matrix().transpose()))
}

/// Superoperator of ρ ↦ Xρ + ρX.
pub fn super_anticommutator(x: &Operator) -> Mat<c64> {
    let id = Operator::identity(x.space());
    let mut m = linalg::kron(x.matrix().as_ref(), id.matrix().as_ref());
    m += linalg::kron(id.matrix().as_ref(), x.matrix().transpose());
    m
}

/// Superoperator of ρ ↦ [H, ρ], i.e. H⊗𝟙 − 𝟙⊗Hᵀ.
pub fn super_commutator(h: &Operator) -> Mat<c64> {
    let id = Operator::identity(h.space());
    let mut m = linalg::kron(h.matrix().as_ref(), id.matrix().as_ref());
    m -= linalg::kron(id.matrix().as_ref(), h.matrix().transpose());
    m
}

/// Applies a superoperator to a density matrix.
pub fn apply_superop(l: &Mat<c64>, rho: &Operator) -> Result<Operator> {
    let d = rho.dim();
    if l.nrows() != d * d || l.ncols() != d * d {
        return Err(Error::Dimension(format!(
            "superoperator is {}x{}, state space has dimension {d}",
            l.nrows(),
            l.ncols()
        )));
    }
    let v = linalg::matvec(l.as_ref(), &linalg::stack(rho.matrix().as_ref()));
    Operator::new(rho.space().clone(), linalg::unstack(&v, d))
}
