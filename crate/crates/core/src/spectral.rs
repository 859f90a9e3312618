//! Hermitian diagonalization, Bohr frequencies and jump operators.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::math::{c64, cabs, cplx, ZERO};
use crate::operators::{CompositeSpace, Operator};
use crate::secular::single_linkage;

/// Eigen-decomposition H = V diag(ε) V† with ascending energies.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub energies: Vec<f64>,
    pub vectors: Mat<c64>,
    pub tol_degeneracy: f64,
    pub space: CompositeSpace,
}

/// Diagonalizes a Hermitian operator. `tol_degeneracy` defaults to 1e-9
/// times the spectral span.
///
/// Each eigenvector is rotated so its largest-magnitude component (first
/// such index) is real and positive, making the output deterministic.
pub fn diagonalize(h: &Operator, tol_degeneracy: Option<f64>) -> Result<EigenSystem> {
    let norm = h.norm_fro();
    let res = h.hermiticity_residual();
    if res > 1e-10 * norm {
        return Err(Error::Validation(format!("Hamiltonian is not Hermitian: ‖H − H†‖ = {res:e}")));
    }
    let herm = h.hermitian_part();
    let evd = herm
        .matrix()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigendecomposition failed: {e:?}")))?;
    let d = h.dim();
    let energies: Vec<f64> = (0..d).map(|i| evd.S()[i].re).collect();
    let mut vectors = evd.U().to_owned();
    for j in 0..d {
        let col = vectors.col(j);
        let max = (0..d).map(|i| cabs(col[i])).fold(0.0, f64::max);
        let pivot = (0..d).find(|&i| cabs(col[i]) >= max * (1.0 - 1e-10)).unwrap_or(0);
        let p = col[pivot];
        let phase = p.conj() * (1.0 / cabs(p));
        for i in 0..d {
            vectors[(i, j)] *= phase;
        }
    }
    let span = energies.last().copied().unwrap_or(0.0) - energies.first().copied().unwrap_or(0.0);
    let tol = tol_degeneracy.unwrap_or(if span > 0.0 { 1e-9 * span } else { 1e-12 });
    Ok(EigenSystem { energies, vectors, tol_degeneracy: tol, space: h.space().clone() })
}

/// Deduplicated Bohr frequencies and the frequency index of each ordered
/// level pair.
#[derive(Clone, Debug)]
pub struct BohrTable {
    /// Distinct frequencies, ascending; exactly antisymmetric around zero.
    pub frequencies: Vec<f64>,
    dim: usize,
    index: Vec<u32>,
}

impl BohrTable {
    /// Index into `frequencies` of ε_j − ε_i.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        self.index[i * self.dim + j] as usize
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn bohr_table(&self) -> BohrTable {
        let d = self.dim();
        let mut pairs: Vec<(f64, u32)> = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                pairs.push((self.energies[j] - self.energies[i], (i * d + j) as u32));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let tol = self.tol_degeneracy;
        let groups = single_linkage(&values, |gap| gap <= tol);
        let mut frequencies: Vec<f64> = groups
            .iter()
            .map(|r| values[r.clone()].iter().sum::<f64>() / r.len() as f64)
            .collect();
        // differences come in exact ± pairs, so the grouping is mirror
        // symmetric; pin the representatives to be so as well
        let g = frequencies.len();
        for k in 0..g / 2 {
            let m = 0.5 * (frequencies[g - 1 - k] - frequencies[k]);
            frequencies[k] = -m;
            frequencies[g - 1 - k] = m;
        }
        if g % 2 == 1 {
            frequencies[g / 2] = 0.0;
        }
        let mut index = alloc::vec![0u32; d * d];
        for (gi, r) in groups.iter().enumerate() {
            for p in &pairs[r.clone()] {
                index[p.1 as usize] = gi as u32;
            }
        }
        BohrTable { frequencies, dim: d, index }
    }
}

/// All distinct differences ε_j − ε_i, ascending, merged within the
/// degeneracy tolerance.
pub fn bohr_frequencies(eig: &EigenSystem) -> Vec<f64> {
    eig.bohr_table().frequencies
}

/// A_β(ω): the part of a coupling operator that lowers the energy by ω.
#[derive(Clone, Debug)]
pub struct JumpOperator {
    pub bath_label: String,
    pub beta: usize,
    pub omega: f64,
    pub matrix: Operator,
}

/// Coupling operator in the eigenbasis with entries below 1e-12·‖A‖ zeroed.
pub(crate) fn eigenbasis_projection(eig: &EigenSystem, a: &Operator) -> Result<Mat<c64>> {
    if a.space() != &eig.space {
        return Err(Error::Dimension(format!(
            "coupling operator space {:?} differs from the Hamiltonian space {:?}",
            a.space().dims(),
            eig.space.dims()
        )));
    }
    let v = &eig.vectors;
    let mut m = v.adjoint() * a.matrix() * v;
    let cut = 1e-12 * a.norm_fro();
    let d = eig.dim();
    for j in 0..d {
        for i in 0..d {
            if cabs(m[(i, j)]) < cut {
                m[(i, j)] = ZERO;
            }
        }
    }
    Ok(m)
}

/// Decomposes `a` into jump operators, one per Bohr frequency with a
/// nonzero projection, sorted by frequency. Matrices are in the original
/// basis and sum back to `a`.
pub fn jump_operators(eig: &EigenSystem, a: &Operator, bath_label: &str, beta: usize) -> Result<Vec<JumpOperator>> {
    let table = eig.bohr_table();
    let proj = eigenbasis_projection(eig, a)?;
    let d = eig.dim();
    let mut by_freq: Vec<Vec<(usize, usize)>> = alloc::vec![Vec::new(); table.frequencies.len()];
    for i in 0..d {
        for j in 0..d {
            if proj[(i, j)] != ZERO {
                by_freq[table.index(i, j)].push((i, j));
            }
        }
    }
    let v = &eig.vectors;
    let mut out = Vec::new();
    for (f, entries) in by_freq.iter().enumerate() {
        if entries.is_empty() {
            continue;
        }
        let mut m = Mat::<c64>::zeros(d, d);
        for &(i, j) in entries {
            m[(i, j)] = proj[(i, j)];
        }
        let back = v * &m * v.adjoint();
        out.push(JumpOperator {
            bath_label: bath_label.into(),
            beta,
            omega: table.frequencies[f],
            matrix: Operator::new(eig.space.clone(), back)?,
        });
    }
    Ok(out)
}

/// e^{iHt} A e^{−iHt} via the eigen-decomposition.
pub fn heisenberg(eig: &EigenSystem, a: &Operator, t: f64) -> Operator {
    let d = eig.dim();
    let v = &eig.vectors;
    let phases: Vec<c64> = eig.energies.iter().map(|&e| cplx(crate::math::cos(e * t), crate::math::sin(e * t))).collect();
    let mut m = v.adjoint() * a.matrix() * v;
    for j in 0..d {
        for i in 0..d {
            m[(i, j)] *= phases[i] * phases[j].conj();
        }
    }
    Operator::new(eig.space.clone(), v * &m * v.adjoint()).expect("same space")
}
