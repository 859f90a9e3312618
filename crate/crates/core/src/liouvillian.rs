//! Liouvillian assembly.
//!
//! Two routes build the same generator. [`build_dissipator`] and
//! [`build_lamb_shift`] sum jump-operator pairs term by term in the original
//! basis; they are simple and serve small systems and cross-checks.
//! [`build_liouvillian`] works entry-wise in the eigenbasis of the jump
//! Hamiltonian and rotates the result back once, which is what makes the
//! 64-level chain tractable.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use faer::{Mat, MatRef};

use crate::bath::{BathSpec, CorrelationCoefficients};
use crate::error::{Error, Result};
use crate::linalg;
use crate::math::{c64, cplx, I, ZERO};
use crate::operators::{sandwich, super_anticommutator, CompositeSpace, Operator};
use crate::secular::{chaining_warnings, cluster_frequencies, cluster_jump_ops, psa_drop, ChainingWarning, FrequencyCluster, SecularPolicy};
use crate::spectral::{diagonalize, eigenbasis_projection, JumpOperator};

/// Dissipator of one bath, α² included.
#[derive(Clone, Debug)]
pub struct BathDissipator {
    pub label: String,
    pub matrix: Mat<c64>,
}

/// A generator together with the pieces it was assembled from.
#[derive(Clone, Debug)]
pub struct LiouvillianBuild {
    /// −i[H + H_LS, ·] + Σ_b D_b, row-stacked.
    pub total: Mat<c64>,
    pub per_bath: Vec<BathDissipator>,
    pub lamb_shift: Operator,
    /// System Hamiltonian of the unitary part, without the Lamb shift.
    pub hamiltonian: Operator,
    pub include_lamb_shift: bool,
    pub policy: SecularPolicy,
    pub kept_pairs: usize,
    pub dropped_pairs: usize,
    pub clusters: Option<Vec<FrequencyCluster>>,
    pub chaining: Vec<ChainingWarning>,
    pub is_local: bool,
    pub tau_r: f64,
}

impl LiouvillianBuild {
    pub fn space(&self) -> &CompositeSpace {
        self.hamiltonian.space()
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn dissipator(&self, label: &str) -> Option<&Mat<c64>> {
        self.per_bath.iter().find(|b| b.label == label).map(|b| &b.matrix)
    }

    /// Hamiltonian generating the unitary part of `total`.
    pub fn effective_hamiltonian(&self) -> Operator {
        if self.include_lamb_shift {
            &self.hamiltonian + &self.lamb_shift
        } else {
            self.hamiltonian.clone()
        }
    }

    /// Assembles a build from its parts: total = −i[H (+ H_LS), ·] + Σ D_b.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        hamiltonian: Operator,
        lamb_shift: Operator,
        per_bath: Vec<BathDissipator>,
        include_lamb_shift: bool,
        policy: SecularPolicy,
        kept_pairs: usize,
        dropped_pairs: usize,
        is_local: bool,
        tau_r: f64,
    ) -> Result<Self> {
        hamiltonian.ensure_same_space(&lamb_shift)?;
        let d = hamiltonian.dim();
        for b in &per_bath {
            if b.matrix.nrows() != d * d || b.matrix.ncols() != d * d {
                return Err(Error::Dimension(format!("dissipator of bath {} has the wrong shape", b.label)));
            }
        }
        let mut build = LiouvillianBuild {
            total: Mat::zeros(d * d, d * d),
            per_bath,
            lamb_shift,
            hamiltonian,
            include_lamb_shift,
            policy,
            kept_pairs,
            dropped_pairs,
            clusters: None,
            chaining: Vec::new(),
            is_local,
            tau_r,
        };
        build.total = build.assemble_total();
        Ok(build)
    }

    fn assemble_total(&self) -> Mat<c64> {
        let d = self.dim();
        let mut total = match self.per_bath.split_first() {
            Some((first, rest)) => {
                let mut t = first.matrix.clone();
                for b in rest {
                    t += &b.matrix;
                }
                t
            }
            None => Mat::zeros(d * d, d * d),
        };
        add_commutator(&mut total, self.effective_hamiltonian().matrix(), d);
        total
    }
}

/// total += −i(H⊗𝟙 − 𝟙⊗Hᵀ), touching only the O(d³) structural nonzeros.
pub(crate) fn add_commutator(total: &mut Mat<c64>, h: &Mat<c64>, d: usize) {
    for i in 0..d {
        for j in 0..d {
            let hij = h[(i, j)];
            if hij == ZERO {
                continue;
            }
            let a = -I * hij;
            // (H⊗𝟙): rows (i,k), cols (j,k)
            for k in 0..d {
                total[(i * d + k, j * d + k)] += a;
            }
            // (𝟙⊗Hᵀ): rows (k,j), cols (k,i)
            for k in 0..d {
                total[(k * d + j, k * d + i)] -= a;
            }
        }
    }
}

/// Inputs shared by the pair-sum routines.
#[derive(Clone, Copy, Debug)]
pub struct PairContext<'a> {
    /// Relaxation time for the partial-secular test.
    pub tau_r: f64,
    /// Frequencies closer than this count as equal.
    pub tol_degeneracy: f64,
    /// Required by the unified policy.
    pub clusters: Option<&'a [FrequencyCluster]>,
}

/// Per-bath dissipators and the pair bookkeeping.
#[derive(Clone, Debug)]
pub struct DissipatorSet {
    pub per_bath: Vec<BathDissipator>,
    pub kept_pairs: usize,
    pub dropped_pairs: usize,
}

enum Weight {
    Pair(c64, c64),
    Dropped,
}

fn pair_weight(
    policy: SecularPolicy,
    ctx: &PairContext<'_>,
    c: &CorrelationCoefficients,
    w: f64,
    wp: f64,
) -> Weight {
    let same = (w - wp).abs() <= ctx.tol_degeneracy;
    let keep = match policy {
        SecularPolicy::Redfield => true,
        SecularPolicy::FullSecular => same,
        SecularPolicy::Partial(cp) => same || !psa_drop(w, wp, ctx.tau_r, cp),
        SecularPolicy::Unified(_) => w == wp,
    };
    if !keep {
        return Weight::Dropped;
    }
    match policy {
        SecularPolicy::Unified(_) => Weight::Pair(cplx(c.gamma_full(w), 0.0), cplx(c.shift_integral(w), 0.0)),
        _ => Weight::Pair(c.gamma(w, wp), c.pi(w, wp)),
    }
}

fn pair_operands(
    jumps: &[Vec<JumpOperator>],
    baths: &[BathSpec],
    policy: SecularPolicy,
    ctx: &PairContext<'_>,
) -> Result<Vec<Vec<JumpOperator>>> {
    policy.validate()?;
    if jumps.len() != baths.len() {
        return Err(Error::Dimension(format!("{} jump lists for {} baths", jumps.len(), baths.len())));
    }
    let mut out = Vec::with_capacity(jumps.len());
    for (list, bath) in jumps.iter().zip(baths) {
        let mut ops = match policy {
            SecularPolicy::Unified(_) => {
                let clusters = ctx
                    .clusters
                    .ok_or_else(|| Error::Validation("the unified policy needs a cluster table".into()))?;
                cluster_jump_ops(list, clusters)?
            }
            _ => list.clone(),
        };
        for j in &ops {
            if j.bath_label != bath.label {
                return Err(Error::Consistency(format!(
                    "jump operator of bath {} listed under bath {}",
                    j.bath_label, bath.label
                )));
            }
            j.matrix.ensure_same_space(&ops[0].matrix)?;
        }
        ops.sort_by(|a, b| a.beta.cmp(&b.beta).then(a.omega.total_cmp(&b.omega)));
        out.push(ops);
    }
    Ok(out)
}

/// Dissipators by direct summation over retained same-bath pairs
/// (β, β′, ω, ω′):
/// α²γ(ω, ω′)[A_β′(ω) · A_β(ω′)† − ½{A_β(ω′)†A_β′(ω), ·}].
pub fn build_dissipator(
    jumps: &[Vec<JumpOperator>],
    baths: &[BathSpec],
    policy: SecularPolicy,
    ctx: &PairContext<'_>,
) -> Result<DissipatorSet> {
    let ops = pair_operands(jumps, baths, policy, ctx)?;
    let mut per_bath = Vec::with_capacity(baths.len());
    let (mut kept, mut dropped) = (0, 0);
    for (list, bath) in ops.iter().zip(baths) {
        let mut acc: Option<Mat<c64>> = None;
        let a2 = bath.alpha * bath.alpha;
        for x in list {
            for y in list {
                let Weight::Pair(g, _) = pair_weight(policy, ctx, &bath.coefficients, x.omega, y.omega) else {
                    dropped += 1;
                    continue;
                };
                kept += 1;
                let ydag = y.matrix.adjoint();
                let mut term = sandwich(&x.matrix, &ydag)?;
                let anti = super_anticommutator(&(&ydag * &x.matrix));
                term -= linalg::scaled(anti.as_ref(), cplx(0.5, 0.0));
                let term = linalg::scaled(term.as_ref(), g * a2);
                match acc.as_mut() {
                    Some(m) => *m += term,
                    None => acc = Some(term),
                }
            }
        }
        let d = bath.coupling_ops[0].dim();
        per_bath.push(BathDissipator {
            label: bath.label.clone(),
            matrix: acc.unwrap_or_else(|| Mat::zeros(d * d, d * d)),
        });
    }
    Ok(DissipatorSet { per_bath, kept_pairs: kept, dropped_pairs: dropped })
}

/// Lamb shift Σ α²π(ω, ω′) A_β(ω′)†A_β′(ω) over the same retained pairs as
/// the dissipator.
pub fn build_lamb_shift(
    jumps: &[Vec<JumpOperator>],
    baths: &[BathSpec],
    policy: SecularPolicy,
    ctx: &PairContext<'_>,
) -> Result<Option<Operator>> {
    let ops = pair_operands(jumps, baths, policy, ctx)?;
    let mut acc: Option<Operator> = None;
    for (list, bath) in ops.iter().zip(baths) {
        let a2 = bath.alpha * bath.alpha;
        for x in list {
            for y in list {
                let Weight::Pair(_, p) = pair_weight(policy, ctx, &bath.coefficients, x.omega, y.omega) else {
                    continue;
                };
                let term = (&y.matrix.adjoint() * &x.matrix).scale(p * a2);
                acc = Some(match acc {
                    Some(m) => &m + &term,
                    None => term,
                });
            }
        }
    }
    Ok(acc.map(|h| h.hermitian_part()))
}

/// Options for [`build_liouvillian`].
#[derive(Clone, Copy, Debug)]
pub struct BuildOptions {
    pub include_lamb_shift: bool,
    /// Defaults to 1e-9 times the spectral span of the jump Hamiltonian.
    pub tol_degeneracy: Option<f64>,
    /// Defaults to α_max⁻².
    pub tau_r: Option<f64>,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { include_lamb_shift: true, tol_degeneracy: None, tau_r: None }
    }
}

/// Relaxation-time estimate α_max⁻² (infinite without coupling).
pub fn relaxation_time(baths: &[BathSpec]) -> f64 {
    let amax = baths.iter().map(|b| b.alpha).fold(0.0, f64::max);
    if amax > 0.0 {
        1.0 / (amax * amax)
    } else {
        f64::INFINITY
    }
}

struct Entry {
    i: u32,
    j: u32,
    label: u32,
    value: c64,
}

/// Builds the full generator. Jump operators come from the eigenbasis of
/// `h_jump_basis` (the full Hamiltonian for a global equation, the bare one
/// for a local equation); the unitary part uses `h_full`.
pub fn build_liouvillian(
    h_full: &Operator,
    h_jump_basis: &Operator,
    baths: &[BathSpec],
    policy: SecularPolicy,
    options: &BuildOptions,
) -> Result<LiouvillianBuild> {
    policy.validate()?;
    h_full.ensure_same_space(h_jump_basis)?;
    if h_full.hermiticity_residual() > 1e-10 * h_full.norm_fro() {
        return Err(Error::Validation("full Hamiltonian is not Hermitian".into()));
    }
    for b in baths {
        for a in &b.coupling_ops {
            a.ensure_same_space(h_full)?;
        }
    }
    let d = h_full.dim();
    let eig = diagonalize(h_jump_basis, options.tol_degeneracy)?;
    let table = eig.bohr_table();
    let tau_r = options.tau_r.unwrap_or_else(|| relaxation_time(baths));

    // labels: Bohr-frequency groups, or clusters of them for the unified policy
    let (label_of_group, label_freq, clusters) = match policy {
        SecularPolicy::Unified(w) => {
            let clusters = cluster_frequencies(&table.frequencies, w)?;
            let mut map = Vec::with_capacity(table.frequencies.len());
            for (c, cl) in clusters.iter().enumerate() {
                map.extend(core::iter::repeat(c as u32).take(cl.members.len()));
            }
            let reps = clusters.iter().map(|c| c.representative).collect::<Vec<_>>();
            (map, reps, Some(clusters))
        }
        _ => ((0..table.frequencies.len() as u32).collect(), table.frequencies.clone(), None),
    };
    let n_labels = label_freq.len();

    let mut per_bath = Vec::with_capacity(baths.len());
    let n = d * d;
    // column-major d²×d² work buffers, shared by the baths
    let mut diss: Vec<c64> = Vec::new();
    let mut scratch: Vec<c64> = Vec::new();
    let mut lamb_eig = Mat::<c64>::zeros(d, d);
    let (mut kept, mut dropped) = (0usize, 0usize);
    for bath in baths {
        let coef = &bath.coefficients;
        let a2 = bath.alpha * bath.alpha;
        let mut rates: Vec<Option<(f64, f64)>> = alloc::vec![None; n_labels];
        let mut total_proj = Mat::<c64>::zeros(d, d);
        let mut present: Vec<Vec<u32>> = Vec::new();
        for a in &bath.coupling_ops {
            let p = eigenbasis_projection(&eig, a)?;
            let mut seen = alloc::vec![false; n_labels];
            for j in 0..d {
                for i in 0..d {
                    if p[(i, j)] != ZERO {
                        seen[label_of_group[table.index(i, j)] as usize] = true;
                    }
                }
            }
            present.push((0..n_labels as u32).filter(|&l| seen[l as usize]).collect());
            total_proj += &p;
        }
        for labels in &present {
            for &l in labels {
                let w = label_freq[l as usize];
                rates[l as usize].get_or_insert_with(|| (coef.rate_integral(w), coef.shift_integral(w)));
            }
        }
        let keep = |l1: u32, l2: u32| -> bool {
            match policy {
                SecularPolicy::Redfield => true,
                SecularPolicy::FullSecular | SecularPolicy::Unified(_) => l1 == l2,
                SecularPolicy::Partial(c) => {
                    l1 == l2 || !psa_drop(label_freq[l1 as usize], label_freq[l2 as usize], tau_r, c)
                }
            }
        };
        // (γ, π) for the pair, α² included
        let weight = |l1: u32, l2: u32| -> (c64, c64) {
            let (i1, s1) = rates[l1 as usize].expect("rate of a present label");
            let (i2, s2) = rates[l2 as usize].expect("rate of a present label");
            match policy {
                SecularPolicy::Unified(_) => (cplx(a2 * 2.0 * core::f64::consts::PI * i1, 0.0), cplx(a2 * s1, 0.0)),
                _ => (coef.gamma_from(i1, i2, s1, s2) * a2, coef.pi_from(i1, i2, s1, s2) * a2),
            }
        };
        for x in &present {
            for y in &present {
                for &l1 in x {
                    for &l2 in y {
                        if keep(l1, l2) {
                            kept += 1;
                        } else {
                            dropped += 1;
                        }
                    }
                }
            }
        }

        // nonzero entries of Σ_β A_β in the eigenbasis, grouped by label
        let mut entries: Vec<Entry> = Vec::new();
        for i in 0..d {
            for j in 0..d {
                let v = total_proj[(i, j)];
                if v != ZERO {
                    entries.push(Entry { i: i as u32, j: j as u32, label: label_of_group[table.index(i, j)], value: v });
                }
            }
        }
        let mut by_label: Vec<Vec<usize>> = alloc::vec![Vec::new(); n_labels];
        for (k, e) in entries.iter().enumerate() {
            by_label[e.label as usize].push(k);
        }
        let active: Vec<u32> = (0..n_labels as u32).filter(|&l| !by_label[l as usize].is_empty()).collect();

        diss.clear();
        diss.resize(n * n, ZERO);
        // jump part: γ(ω, ω′) A(ω) ⊗ A(ω′)*
        for &l1 in &active {
            for &l2 in &active {
                if !keep(l1, l2) {
                    continue;
                }
                let (g, _) = weight(l1, l2);
                for &k1 in &by_label[l1 as usize] {
                    let e1 = &entries[k1];
                    let ga = g * e1.value;
                    let (i1, j1) = (e1.i as usize, e1.j as usize);
                    for &k2 in &by_label[l2 as usize] {
                        let e2 = &entries[k2];
                        diss[i1 * d + e2.i as usize + n * (j1 * d + e2.j as usize)] += ga * e2.value.conj();
                    }
                }
            }
        }
        // X = Σ γ(ω, ω′) A(ω′)†A(ω) and the Lamb shift, row by row of A
        let mut x = Mat::<c64>::zeros(d, d);
        let mut row_start = 0;
        while row_start < entries.len() {
            let i = entries[row_start].i;
            let mut row_end = row_start;
            while row_end < entries.len() && entries[row_end].i == i {
                row_end += 1;
            }
            let row = &entries[row_start..row_end];
            for e1 in row {
                for e2 in row {
                    if !keep(e1.label, e2.label) {
                        continue;
                    }
                    let (g, p) = weight(e1.label, e2.label);
                    let prod = e2.value.conj() * e1.value;
                    x[(e2.j as usize, e1.j as usize)] += g * prod;
                    lamb_eig[(e2.j as usize, e1.j as usize)] += p * prod;
                }
            }
            row_start = row_end;
        }
        // −½(X⊗𝟙 + 𝟙⊗Xᵀ)
        for i in 0..d {
            for j in 0..d {
                let h = x[(i, j)] * cplx(-0.5, 0.0);
                if h == ZERO {
                    continue;
                }
                for k in 0..d {
                    diss[i * d + k + n * (j * d + k)] += h;
                    diss[k * d + j + n * (k * d + i)] += h;
                }
            }
        }
        linalg::kron_conjugate_buf(&mut diss, &mut scratch, eig.vectors.as_ref());
        let matrix = MatRef::from_column_major_slice(&diss, n, n).to_owned();
        per_bath.push(BathDissipator { label: bath.label.clone(), matrix });
    }

    let v = &eig.vectors;
    let lamb = Operator::new(h_full.space().clone(), v * &lamb_eig * v.adjoint())?.hermitian_part();
    let is_local = h_full.matrix() != h_jump_basis.matrix();
    let mut build = LiouvillianBuild::from_parts(
        h_full.clone(),
        lamb,
        per_bath,
        options.include_lamb_shift,
        policy,
        kept,
        dropped,
        is_local,
        tau_r,
    )?;
    if let Some(c) = &clusters {
        build.chaining = chaining_warnings(c);
    }
    build.clusters = clusters;
    Ok(build)
}
