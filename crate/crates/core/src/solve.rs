//! Steady states, propagation and heat currents.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use faer::linalg::solvers::{Solve, SolveLstsq};
use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};
use crate::expm::expm;
use crate::linalg::{self, fro_norm};
use crate::liouvillian::LiouvillianBuild;
use crate::math::{c64, cabs, cplx, sqrt, ZERO};
use crate::operators::Operator;

// ---- compensated arithmetic ------------------------------------------------

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    let c = 134_217_729.0 * a;
    let hi = c - (c - a);
    (hi, a - hi)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    (p, ((ah * bh - p) + ah * bl + al * bh) + al * bl)
}

/// Double-double accumulator for a real sum.
#[derive(Clone, Copy, Default)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    #[inline]
    fn add(&mut self, x: f64) {
        let (s, e) = two_sum(self.hi, x);
        self.hi = s;
        self.lo += e;
    }

    #[inline]
    fn add_prod(&mut self, a: f64, b: f64) {
        let (p, e) = two_prod(a, b);
        self.add(p);
        self.lo += e;
    }

    #[inline]
    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

#[derive(Clone, Copy, Default)]
struct CDd {
    re: Dd,
    im: Dd,
}

impl CDd {
    #[inline]
    fn add_prod(&mut self, a: c64, b: c64) {
        self.re.add_prod(a.re, b.re);
        self.re.add_prod(-a.im, b.im);
        self.im.add_prod(a.re, b.im);
        self.im.add_prod(a.im, b.re);
    }

    #[inline]
    fn add(&mut self, a: c64) {
        self.re.add(a.re);
        self.im.add(a.im);
    }

    #[inline]
    fn value(self) -> c64 {
        cplx(self.re.value(), self.im.value())
    }
}

/// M·x with compensated accumulation, added into `acc`.
fn dd_matvec_into(m: MatRef<'_, c64>, x: &[c64], acc: &mut [CDd]) {
    for (j, &xj) in x.iter().enumerate() {
        if xj == ZERO {
            continue;
        }
        let col = m.col(j);
        for (i, a) in acc.iter_mut().enumerate() {
            let v = col[i];
            if v != ZERO {
                a.add_prod(v, xj);
            }
        }
    }
}

/// −i(H X − X H) for row-stacked x, compensated, added into `acc`.
fn dd_commutator_into(h: &Mat<c64>, x: &[c64], d: usize, acc: &mut [CDd]) {
    let mi = cplx(0.0, -1.0);
    for a in 0..d {
        for b in 0..d {
            let slot = &mut acc[a * d + b];
            for c in 0..d {
                let hac = h[(a, c)];
                if hac != ZERO {
                    slot.add_prod(mi * hac, x[c * d + b]);
                }
                let hcb = h[(c, b)];
                if hcb != ZERO {
                    slot.add_prod(-mi * hcb, x[a * d + c]);
                }
            }
        }
    }
}

/// 𝓛x evaluated from the build's parts, so that the rounding of the summed
/// matrix does not enter.
fn structured_apply(build: &LiouvillianBuild, x: &[c64]) -> Vec<CDd> {
    let d = build.dim();
    let mut acc = alloc::vec![CDd::default(); d * d];
    dd_commutator_into(build.effective_hamiltonian().matrix(), x, d, &mut acc);
    for b in &build.per_bath {
        dd_matvec_into(b.matrix.as_ref(), x, &mut acc);
    }
    acc
}

fn norm2(v: &[c64]) -> f64 {
    sqrt(v.iter().map(|z| z.norm_sqr()).sum())
}

// ---- steady state ------------------------------------------------------------

/// How a steady state was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SteadyMethod {
    LeastSquares,
    InverseIteration,
}

#[derive(Clone, Debug)]
pub struct SteadyState {
    /// Hermitian, unit trace.
    pub rho: Operator,
    /// ‖𝓛·vec(ρ)‖₂.
    pub residual: f64,
    pub method: SteadyMethod,
    /// Smallest eigenvalue of ρ; slightly negative values are possible for
    /// Redfield-type generators.
    pub min_eigenvalue: f64,
}

/// Null vector of `l` normalized by `trace_row · x = 1`, by least squares on
/// the stacked system [𝓛; w·t] x = (0, …, 0, w) with w = ‖𝓛‖_F/√n.
///
/// `residual` evaluates 𝓛x to extended precision; its output drives
/// iterative refinement.
pub(crate) fn augmented_lstsq(
    l: MatRef<'_, c64>,
    trace_row: &[c64],
    residual: &dyn Fn(&[c64]) -> Vec<c64>,
) -> Result<Vec<c64>> {
    let n = l.ncols();
    let w = fro_norm(l) / sqrt(n as f64).max(1.0);
    let w = if w > 0.0 { w } else { 1.0 };
    let mut a = Mat::<c64>::zeros(n + 1, n);
    for j in 0..n {
        for i in 0..n {
            a[(i, j)] = l[(i, j)];
        }
        a[(n, j)] = trace_row[j] * w;
    }
    let qr = a.qr();
    let r = qr.thin_R();
    let diag: Vec<f64> = (0..n).map(|k| cabs(r[(k, k)])).collect();
    let rmax = diag.iter().copied().fold(0.0, f64::max);
    let cut = n as f64 * f64::EPSILON * rmax;
    let deficient = diag.iter().filter(|&&v| v <= cut).count();
    if deficient > 0 {
        return Err(Error::DegenerateSteadyState { null_dim: deficient + 1 });
    }
    let mut rhs = Mat::<c64>::zeros(n + 1, 1);
    rhs[(n, 0)] = cplx(w, 0.0);
    let sol = qr.solve_lstsq(&rhs);
    let mut x: Vec<c64> = (0..n).map(|i| sol[(i, 0)]).collect();
    for _ in 0..4 {
        let lx = residual(&x);
        let mut tr = CDd::default();
        for (t, xi) in trace_row.iter().zip(&x) {
            if *t != ZERO {
                tr.add_prod(*t, *xi);
            }
        }
        tr.add(cplx(-1.0, 0.0));
        let mut rhs = Mat::<c64>::zeros(n + 1, 1);
        for i in 0..n {
            rhs[(i, 0)] = -lx[i];
        }
        rhs[(n, 0)] = -tr.value() * w;
        let dx = qr.solve_lstsq(&rhs);
        let mut step = 0.0;
        for i in 0..n {
            x[i] += dx[(i, 0)];
            step += dx[(i, 0)].norm_sqr();
        }
        if sqrt(step) <= f64::EPSILON * norm2(&x) {
            break;
        }
    }
    Ok(x)
}

/// Eigenvector of the smallest-magnitude eigenvalue by shifted inverse
/// iteration.
fn inverse_iteration(l: MatRef<'_, c64>) -> Vec<c64> {
    let n = l.nrows();
    let shift = 1e-12 * fro_norm(l).max(1e-300);
    let mut m = l.to_owned();
    for i in 0..n {
        m[(i, i)] -= cplx(shift, 0.0);
    }
    let lu = m.partial_piv_lu();
    let mut v = Mat::<c64>::from_fn(n, 1, |i, _| cplx(1.0 + 1e-3 * (i % 7) as f64, 0.0));
    for _ in 0..3 {
        v = lu.solve(&v);
        let s = sqrt((0..n).map(|i| v[(i, 0)].norm_sqr()).sum::<f64>());
        if !(s > 0.0 && s.is_finite()) {
            break;
        }
        v = linalg::scaled(v.as_ref(), cplx(1.0 / s, 0.0));
    }
    (0..n).map(|i| v[(i, 0)]).collect()
}

fn finalize(build: &LiouvillianBuild, x: &[c64], method: SteadyMethod) -> Result<SteadyState> {
    let d = build.dim();
    let raw = Operator::new(build.space().clone(), linalg::unstack(x, d))?;
    let tr = raw.trace();
    if cabs(tr) == 0.0 || !tr.re.is_finite() {
        return Err(Error::Numerical("steady-state candidate has zero trace".into()));
    }
    let rho = raw.scale(tr.inv()).hermitian_part();
    let tr = rho.trace().re;
    let rho = rho.scale(cplx(1.0 / tr, 0.0));
    let v = linalg::stack(rho.matrix().as_ref());
    let residual = norm2(&linalg::matvec(build.total.as_ref(), &v));
    let min_eigenvalue = rho
        .matrix()
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigenvalues of the steady state: {e:?}")))?
        .first()
        .copied()
        .unwrap_or(0.0);
    Ok(SteadyState { rho, residual, method, min_eigenvalue })
}

/// Largest entry of ⟨⟨𝟙|𝓛, zero for a trace-preserving generator.
pub fn trace_defect(l: &Mat<c64>, d: usize) -> f64 {
    let n = d * d;
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let s: c64 = (0..d).map(|i| l[(i * d + i, j)]).sum();
        worst = worst.max(cabs(s));
    }
    worst
}

/// Classes of vectorized indices mapped into themselves by `l`, ignoring
/// entries with |l_rc| ≤ `cut`. Sorted within and by smallest member.
fn invariant_classes(l: MatRef<'_, c64>, cut: f64) -> Vec<Vec<usize>> {
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let n = l.nrows();
    let cut2 = cut * cut;
    let mut parent: Vec<usize> = (0..n).collect();
    for c in 0..n {
        for r in 0..n {
            if r != c && l[(r, c)].norm_sqr() > cut2 {
                let (a, b) = (find(&mut parent, r), find(&mut parent, c));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut slot = alloc::vec![usize::MAX; n];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = classes.len();
            classes.push(Vec::new());
        }
        classes[slot[root]].push(i);
    }
    classes
}

fn submatrix(l: MatRef<'_, c64>, idx: &[usize]) -> Mat<c64> {
    Mat::from_fn(idx.len(), idx.len(), |a, b| l[(idx[a], idx[b])])
}

/// Steady-state solve restricted to the invariant classes that carry trace,
/// when 𝓛 splits (e.g. under a weak number symmetry). `None` if it does not.
///
/// The remaining classes are checked for null vectors, which would be
/// stationary traceless operators and make the steady state non-unique.
fn reduced_solve(
    build: &LiouvillianBuild,
    trace_row: &[c64],
    residual: &dyn Fn(&[c64]) -> Vec<c64>,
) -> Option<Result<Vec<c64>>> {
    let l = build.total.as_ref();
    let n = l.nrows();
    let max = (0..n).flat_map(|c| (0..n).map(move |r| (r, c))).fold(0.0f64, |m, (r, c)| m.max(cabs(l[(r, c)])));
    let classes = invariant_classes(l, 64.0 * f64::EPSILON * max);
    if classes.len() < 2 {
        return None;
    }
    let mut support = Vec::new();
    for class in &classes {
        if class.iter().any(|&k| trace_row[k] != ZERO) {
            support.extend_from_slice(class);
        } else {
            let m = submatrix(l, class);
            let r = m.qr().thin_R().to_owned();
            let diag: Vec<f64> = (0..class.len()).map(|k| cabs(r[(k, k)])).collect();
            let cut = class.len() as f64 * f64::EPSILON * diag.iter().copied().fold(0.0, f64::max);
            let deficient = diag.iter().filter(|&&v| v <= cut).count();
            if deficient > 0 {
                return Some(Err(Error::DegenerateSteadyState { null_dim: deficient + 1 }));
            }
        }
    }
    if support.len() == n {
        return None;
    }
    support.sort_unstable();
    let sub = submatrix(l, &support);
    let sub_trace: Vec<c64> = support.iter().map(|&k| trace_row[k]).collect();
    let embed = |xs: &[c64]| {
        let mut full = alloc::vec![ZERO; n];
        for (&k, &v) in support.iter().zip(xs) {
            full[k] = v;
        }
        full
    };
    let sub_residual = |xs: &[c64]| -> Vec<c64> {
        let r = residual(&embed(xs));
        support.iter().map(|&k| r[k]).collect()
    };
    Some(augmented_lstsq(sub.as_ref(), &sub_trace, &sub_residual).map(|xs| embed(&xs)))
}

/// Unique stationary state of the build's generator.
///
/// The primary method is augmented least squares with iterative refinement,
/// restricted to the trace-carrying invariant classes of 𝓛 when it splits;
/// if its residual exceeds `tol`, inverse iteration is tried. Degenerate
/// stationary spaces are reported as errors.
pub fn steady_state(build: &LiouvillianBuild, tol: f64) -> Result<SteadyState> {
    let d = build.dim();
    let l = &build.total;
    let norm = fro_norm(l.as_ref());
    let defect = trace_defect(l, d);
    if defect > 1e-10 * norm.max(f64::MIN_POSITIVE) {
        return Err(Error::Validation(format!("generator is not trace preserving (defect {defect:e})")));
    }
    let trace_row: Vec<c64> = (0..d * d).map(|k| if k / d == k % d { cplx(1.0, 0.0) } else { ZERO }).collect();
    let residual = |x: &[c64]| -> Vec<c64> { structured_apply(build, x).into_iter().map(CDd::value).collect() };
    match reduced_solve(build, &trace_row, &residual) {
        Some(Err(e @ Error::DegenerateSteadyState { .. })) => return Err(e),
        Some(Ok(x)) => {
            if let Ok(s) = finalize(build, &x, SteadyMethod::LeastSquares) {
                if s.residual <= tol {
                    return Ok(s);
                }
            }
        }
        _ => {}
    }
    let primary = augmented_lstsq(l.as_ref(), &trace_row, &residual).and_then(|x| finalize(build, &x, SteadyMethod::LeastSquares));
    let primary_residual = match primary {
        Ok(s) if s.residual <= tol => return Ok(s),
        Ok(s) => s.residual,
        Err(Error::DegenerateSteadyState { null_dim }) => return Err(Error::DegenerateSteadyState { null_dim }),
        Err(_) => f64::INFINITY,
    };
    let fallback = finalize(build, &inverse_iteration(l.as_ref()), SteadyMethod::InverseIteration);
    match fallback {
        Ok(s) if s.residual <= tol => Ok(s),
        Ok(s) => Err(Error::NonConvergence { primary: primary_residual, fallback: s.residual }),
        Err(_) => Err(Error::NonConvergence { primary: primary_residual, fallback: f64::INFINITY }),
    }
}

// ---- propagation -------------------------------------------------------------

/// ρ(t) = e^{𝓛t}ρ₀ at each requested time (ascending, non-negative).
pub fn evolve(build: &LiouvillianBuild, rho0: &Operator, times: &[f64]) -> Result<Vec<Operator>> {
    let d = build.dim();
    rho0.ensure_same_space(&build.hamiltonian)?;
    if rho0.hermiticity_residual() > 1e-10 * rho0.norm_fro().max(1.0) {
        return Err(Error::Validation("initial state is not Hermitian".into()));
    }
    let tr = rho0.trace();
    if cabs(tr - cplx(1.0, 0.0)) > 1e-10 {
        return Err(Error::Validation(format!("initial state has trace {tr}")));
    }
    let mut prev = 0.0;
    for &t in times {
        if !(t.is_finite() && t >= prev) {
            return Err(Error::Validation(format!("times must be finite, non-negative and ascending (got {t})")));
        }
        prev = t;
    }
    let mut out = Vec::with_capacity(times.len());
    let mut x = linalg::stack(rho0.matrix().as_ref());
    let mut now = 0.0;
    let mut cached: Option<(f64, Mat<c64>)> = None;
    for &t in times {
        let dt = t - now;
        if dt > 0.0 {
            let hit = matches!(&cached, Some((s, _)) if *s == dt);
            if !hit {
                let gen = linalg::scaled(build.total.as_ref(), cplx(dt, 0.0));
                cached = Some((dt, expm(&gen)?));
            }
            let p = &cached.as_ref().expect("propagator cached").1;
            x = linalg::matvec(p.as_ref(), &x);
            if x.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::Numerical(format!("propagation produced non-finite values at t = {t}")));
            }
            now = t;
        }
        out.push(Operator::new(rho0.space().clone(), linalg::unstack(&x, d))?);
    }
    Ok(out)
}

// ---- heat flow ---------------------------------------------------------------

/// Energy operator inside the heat-current trace.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EnergyOperator {
    /// The bare system Hamiltonian.
    #[default]
    System,
    /// System Hamiltonian plus the build's Lamb shift.
    SystemWithLambShift,
}

#[derive(Clone, Copy, Debug)]
pub struct HeatFlowOptions {
    pub energy: EnergyOperator,
    /// Largest accepted ‖𝓛·vec(ρ)‖₂ relative to ‖𝓛‖_F.
    pub stale_tol: f64,
}

impl Default for HeatFlowOptions {
    fn default() -> Self {
        Self { energy: EnergyOperator::System, stale_tol: 1e-9 }
    }
}

#[derive(Clone, Debug)]
pub struct HeatFlowResult {
    /// Energy current out of each bath into the system, in bath order.
    pub per_bath: Vec<(String, f64)>,
    /// |Σ_i J_i|.
    pub imbalance: f64,
}

impl HeatFlowResult {
    pub fn get(&self, label: &str) -> Option<f64> {
        self.per_bath.iter().find(|(l, _)| l == label).map(|p| p.1)
    }

    /// Imbalance relative to the largest current.
    pub fn relative_imbalance(&self) -> f64 {
        let m = self.per_bath.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
        if m > 0.0 {
            self.imbalance / m
        } else {
            self.imbalance
        }
    }
}

/// J_i = Tr[E·D_i(ρ)] for every bath dissipator D_i of the build.
pub fn heat_flow(h_s: &Operator, build: &LiouvillianBuild, rho: &Operator) -> Result<HeatFlowResult> {
    heat_flow_with(h_s, build, rho, &HeatFlowOptions::default())
}

pub fn heat_flow_with(
    h_s: &Operator,
    build: &LiouvillianBuild,
    rho: &Operator,
    options: &HeatFlowOptions,
) -> Result<HeatFlowResult> {
    h_s.ensure_same_space(&build.hamiltonian)?;
    rho.ensure_same_space(&build.hamiltonian)?;
    let d = build.dim();
    let x = linalg::stack(rho.matrix().as_ref());
    let check = norm2(&linalg::matvec(build.total.as_ref(), &x));
    let scale = fro_norm(build.total.as_ref());
    if check > options.stale_tol * scale {
        return Err(Error::Validation(format!(
            "state is not stationary for this generator (residual {check:e})"
        )));
    }
    let energy = match options.energy {
        EnergyOperator::System => h_s.clone(),
        EnergyOperator::SystemWithLambShift => h_s + &build.lamb_shift,
    };
    let e = energy.matrix();
    let mut per_bath = Vec::with_capacity(build.per_bath.len());
    let mut sum = Dd::default();
    for b in &build.per_bath {
        let mut acc = alloc::vec![CDd::default(); d * d];
        dd_matvec_into(b.matrix.as_ref(), &x, &mut acc);
        // Tr[E X] = Σ_{a,c} E_ca X_ac
        let mut tr = CDd::default();
        for a in 0..d {
            for c in 0..d {
                let eca = e[(c, a)];
                if eca != ZERO {
                    let slot = acc[a * d + c];
                    tr.add_prod(eca, cplx(slot.re.hi, slot.im.hi));
                    tr.add_prod(eca, cplx(slot.re.lo, slot.im.lo));
                }
            }
        }
        let j = tr.value().re;
        sum.add(tr.re.hi);
        sum.add(tr.re.lo);
        per_bath.push((b.label.clone(), j));
    }
    Ok(HeatFlowResult { per_bath, imbalance: sum.value().abs() })
}
