//! Subcommands.

use std::path::{Path, PathBuf};

use log::{debug, info, warn};
use meqforge_core::liouvillian::{build_liouvillian, BuildOptions, LiouvillianBuild};
use meqforge_core::models::{build_chain, chain_number_operator, Mode};
use meqforge_core::operators::Operator;
use meqforge_core::secular::{chaining_warnings, cluster_frequencies};
use meqforge_core::solve::{heat_flow_with, steady_state, HeatFlowOptions};
use meqforge_core::spectral::{bohr_frequencies, diagonalize};
use meqforge_core::symmetry::{block_transform, check_operator_symmetry};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{bath_labels, bath_temperatures, with_parameter, Model, RunConfig, SymmetryConfig};
use crate::export::{csv_writer, matrix_rows, write_json, write_matrix_market};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Liouvillian,
    Steady,
    Sweep,
    Blocks,
}

/// Everything built for one parameter point.
struct Prepared {
    /// Energy operator of the heat currents.
    h_s: Operator,
    /// Hamiltonian whose eigenbasis defines the jump operators.
    h_basis: Operator,
    number: Option<Operator>,
    build: LiouvillianBuild,
}

fn options(cfg: &RunConfig) -> BuildOptions {
    BuildOptions { include_lamb_shift: cfg.include_lamb_shift, ..BuildOptions::default() }
}

fn basis_hamiltonian(model: &Model, mode: Mode) -> Result<(Operator, Operator), CliError> {
    match model {
        Model::Chain(p) => {
            let sys = meqforge_core::models::chain_hamiltonians(p)?;
            let basis = if mode == Mode::Local { sys.h_bare.clone() } else { sys.h_full.clone() };
            Ok((sys.h_full, basis))
        }
        Model::Custom(c) => {
            let basis = match (mode, &c.bare_hamiltonian) {
                (Mode::Local, Some(b)) => b.clone(),
                _ => c.hamiltonian.clone(),
            };
            Ok((c.hamiltonian.clone(), basis))
        }
    }
}

fn prepare(model: &Model, cfg: &RunConfig) -> Result<Prepared, CliError> {
    match model {
        Model::Chain(p) => {
            let (sys, build) = build_chain(p, cfg.policy, cfg.mode, &options(cfg))?;
            let number = chain_number_operator(&sys)?;
            let h_basis = if cfg.mode == Mode::Local { sys.h_bare.clone() } else { sys.h_full.clone() };
            Ok(Prepared { h_s: sys.h_full, h_basis, number: Some(number), build })
        }
        Model::Custom(c) => {
            let (h_s, h_basis) = basis_hamiltonian(model, cfg.mode)?;
            let build = build_liouvillian(&c.hamiltonian, &h_basis, &c.baths, cfg.policy, &options(cfg))?;
            Ok(Prepared { h_s, h_basis, number: None, build })
        }
    }
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_path_buf(), e))
}

/// Runs one subcommand, writing into `out` (or the configured directory).
/// Returns the process exit status: 0 on success, 1 when some result is
/// unusable (failed sweep points, broken symmetry); files are written either
/// way.
pub fn run(cmd: Command, cfg: &RunConfig, out: Option<&Path>, jobs: usize) -> Result<i32, CliError> {
    let dir: PathBuf = out.map(Path::to_path_buf).or_else(|| cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    ensure_dir(&dir)?;
    match cmd {
        Command::Spectrum => spectrum(cfg, &dir),
        Command::Liouvillian => liouvillian(cfg, &dir),
        Command::Steady => steady(cfg, &dir),
        Command::Sweep => sweep(cfg, &dir, jobs),
        Command::Blocks => blocks(cfg, &dir),
    }
}

// ---- spectrum ----------------------------------------------------------------

fn spectrum(cfg: &RunConfig, dir: &Path) -> Result<i32, CliError> {
    let (_, h_basis) = basis_hamiltonian(&cfg.model, cfg.mode)?;
    let eig = diagonalize(&h_basis, None)?;
    let freqs = bohr_frequencies(&eig);
    let clusters = cluster_frequencies(&freqs, cfg.cluster_width)?;
    let warnings = chaining_warnings(&clusters);
    for w in &warnings {
        warn!("cluster {} around {} has width {} but its nearest neighbour is {} away", w.cluster, w.representative, w.width, w.gap);
    }

    let mut wtr = csv_writer(&dir.join("spectrum.csv"))?;
    wtr.write_record(["omega", "cluster", "representative"])?;
    for (k, c) in clusters.iter().enumerate() {
        for m in &c.members {
            wtr.write_record([m.to_string(), k.to_string(), c.representative.to_string()])?;
        }
    }
    wtr.flush().map_err(|e| CliError::Io(dir.join("spectrum.csv"), e))?;

    let mut wtr = csv_writer(&dir.join("clusters.csv"))?;
    wtr.write_record(["cluster", "representative", "size", "width", "gap_below", "gap_above", "chaining"])?;
    for (k, c) in clusters.iter().enumerate() {
        let below = k.checked_sub(1).map(|p| c.members[0] - clusters[p].members[clusters[p].members.len() - 1]);
        let above = clusters.get(k + 1).map(|n| n.members[0] - c.members[c.members.len() - 1]);
        let fmt = |g: Option<f64>| g.map(|g| g.to_string()).unwrap_or_default();
        let chained = warnings.iter().any(|w| w.cluster == k);
        wtr.write_record([
            k.to_string(),
            c.representative.to_string(),
            c.members.len().to_string(),
            c.width().to_string(),
            fmt(below),
            fmt(above),
            chained.to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| CliError::Io(dir.join("clusters.csv"), e))?;

    let mut wtr = csv_writer(&dir.join("energies.csv"))?;
    wtr.write_record(["index", "energy"])?;
    for (k, e) in eig.energies.iter().enumerate() {
        wtr.write_record([k.to_string(), e.to_string()])?;
    }
    wtr.flush().map_err(|e| CliError::Io(dir.join("energies.csv"), e))?;

    println!(
        "{} Bohr frequencies in {} clusters (w = {}), {} chaining warnings",
        freqs.len(),
        clusters.len(),
        cfg.cluster_width,
        warnings.len()
    );
    Ok(0)
}

// ---- liouvillian -------------------------------------------------------------

#[derive(Serialize)]
struct ClusterReport {
    representative: f64,
    members: Vec<f64>,
}

#[derive(Serialize)]
struct LiouvillianReport {
    policy: String,
    mode: &'static str,
    dimension: usize,
    include_lamb_shift: bool,
    kept_pairs: usize,
    dropped_pairs: usize,
    relaxation_time: f64,
    clusters: Option<Vec<ClusterReport>>,
    chaining_warnings: usize,
    files: Vec<String>,
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Global => "global",
        Mode::Local => "local",
    }
}

fn liouvillian(cfg: &RunConfig, dir: &Path) -> Result<i32, CliError> {
    let prep = prepare(&cfg.model, cfg)?;
    let b = &prep.build;
    let mut files = vec!["liouvillian.mtx".to_string()];
    write_matrix_market(&dir.join("liouvillian.mtx"), &b.total)?;
    for d in &b.per_bath {
        let name = format!("dissipator_{}.mtx", d.label);
        write_matrix_market(&dir.join(&name), &d.matrix)?;
        files.push(name);
    }
    let report = LiouvillianReport {
        policy: b.policy.name(),
        mode: mode_name(cfg.mode),
        dimension: b.dim(),
        include_lamb_shift: b.include_lamb_shift,
        kept_pairs: b.kept_pairs,
        dropped_pairs: b.dropped_pairs,
        relaxation_time: b.tau_r,
        clusters: b.clusters.as_ref().map(|cl| {
            cl.iter().map(|c| ClusterReport { representative: c.representative, members: c.members.clone() }).collect()
        }),
        chaining_warnings: b.chaining.len(),
        files,
    };
    write_json(&dir.join("liouvillian.json"), &report)?;
    println!("kept {} pairs, dropped {} ({})", b.kept_pairs, b.dropped_pairs, b.policy.name());
    Ok(0)
}

// ---- steady state and sweeps -------------------------------------------------

/// Outcome of the (build, solve, heat flow) pipeline at one point. Failures
/// are recorded in `flags` rather than returned as errors.
#[derive(Clone, Debug, Serialize)]
pub struct PointResult {
    pub heat_flows: Vec<(String, f64)>,
    pub imbalance: f64,
    pub residual: f64,
    pub min_eigenvalue: f64,
    pub flags: Vec<String>,
    #[serde(skip)]
    pub rho: Option<Operator>,
}

impl PointResult {
    fn failed(labels: &[String], flag: String) -> Self {
        PointResult {
            heat_flows: labels.iter().map(|l| (l.clone(), f64::NAN)).collect(),
            imbalance: f64::NAN,
            residual: f64::NAN,
            min_eigenvalue: f64::NAN,
            flags: vec![flag],
            rho: None,
        }
    }

    pub fn flow(&self, k: usize) -> f64 {
        self.heat_flows.get(k).map_or(f64::NAN, |p| p.1)
    }
}

pub fn evaluate(model: &Model, cfg: &RunConfig) -> PointResult {
    let labels = bath_labels(model);
    let prep = match prepare(model, cfg) {
        Ok(p) => p,
        Err(e) => return PointResult::failed(&labels, format!("build failed: {e}")),
    };
    let ss = match steady_state(&prep.build, cfg.tol) {
        Ok(s) => s,
        Err(e) => return PointResult::failed(&labels, format!("nonconverged: {e}")),
    };
    let options = HeatFlowOptions { energy: cfg.energy, ..Default::default() };
    let flow = match heat_flow_with(&prep.h_s, &prep.build, &ss.rho, &options) {
        Ok(f) => f,
        Err(e) => return PointResult::failed(&labels, format!("heat flow failed: {e}")),
    };
    let mut flags = Vec::new();
    let imbalance = flow.relative_imbalance();
    // Σ_i J_i = Tr[H_S 𝓛ρ] up to the Lamb shift, so it cannot be resolved
    // below ‖H_S‖·residual
    let total: f64 = flow.per_bath.iter().map(|p| p.1).sum();
    let floor = 10.0 * prep.h_s.norm_fro() * ss.residual;
    if imbalance > 1e-10 && total.abs() > floor {
        flags.push("imbalance".to_string());
    }
    if ss.min_eigenvalue < -1e-10 {
        flags.push("negative_state".to_string());
    }
    // the hottest bath should feed the system
    let temps = bath_temperatures(model);
    let hottest = temps.iter().max_by(|a, b| a.1.total_cmp(b.1));
    let coldest = temps.iter().min_by(|a, b| a.1.total_cmp(b.1));
    if let (Some((hot, th)), Some((_, tc))) = (hottest, coldest) {
        if th > tc && flow.get(hot).is_some_and(|j| j < 0.0) {
            flags.push("reverse_flow".to_string());
        }
    }
    PointResult {
        heat_flows: flow.per_bath.clone(),
        imbalance,
        residual: ss.residual,
        min_eigenvalue: ss.min_eigenvalue,
        flags,
        rho: Some(ss.rho),
    }
}

#[derive(Serialize)]
struct SteadyReport<'a> {
    policy: String,
    mode: &'static str,
    heat_flows: std::collections::BTreeMap<String, f64>,
    imbalance: f64,
    residual: f64,
    min_eigenvalue: f64,
    flags: &'a [String],
    rho: Option<Vec<Vec<[f64; 2]>>>,
}

fn steady(cfg: &RunConfig, dir: &Path) -> Result<i32, CliError> {
    let r = evaluate(&cfg.model, cfg);
    let report = SteadyReport {
        policy: cfg.policy.name(),
        mode: mode_name(cfg.mode),
        heat_flows: r.heat_flows.iter().cloned().collect(),
        imbalance: r.imbalance,
        residual: r.residual,
        min_eigenvalue: r.min_eigenvalue,
        flags: &r.flags,
        rho: r.rho.as_ref().map(|rho| matrix_rows(rho.matrix())),
    };
    write_json(&dir.join("steady.json"), &report)?;
    for (label, j) in &r.heat_flows {
        println!("J_{label} = {j:e}");
    }
    if r.rho.is_none() {
        eprintln!("steady state failed: {}", r.flags.join("; "));
        return Ok(1);
    }
    if !r.flags.is_empty() {
        warn!("flags: {}", r.flags.join(";"));
    }
    Ok(0)
}

fn sweep(cfg: &RunConfig, dir: &Path, jobs: usize) -> Result<i32, CliError> {
    let (name1, grid1, second) = cfg.sweep.as_ref().ok_or_else(|| CliError::Config {
        path: "sweep".into(),
        message: "the sweep command needs a sweep section".into(),
    })?;
    let mut points: Vec<(f64, Option<f64>)> = Vec::new();
    for &v1 in grid1 {
        match second {
            Some((_, grid2)) => points.extend(grid2.iter().map(|&v2| (v1, Some(v2)))),
            None => points.push((v1, None)),
        }
    }
    let models: Vec<Result<Model, CliError>> = points
        .iter()
        .map(|&(v1, v2)| {
            let m = with_parameter(&cfg.model, name1, v1)?;
            match (second, v2) {
                (Some((name2, _)), Some(v2)) => with_parameter(&m, name2, v2),
                _ => Ok(m),
            }
        })
        .collect();
    info!("sweeping {} points on {} worker(s)", points.len(), jobs);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().map_err(|e| CliError::Pool(e.to_string()))?;
    let labels = bath_labels(&cfg.model);
    let results: Vec<PointResult> = pool.install(|| {
        models
            .par_iter()
            .enumerate()
            .map(|(k, m)| {
                let r = match m {
                    Ok(m) => evaluate(m, cfg),
                    Err(e) => PointResult::failed(&labels, format!("invalid point: {e}")),
                };
                debug!("point {k}: {:?} {:?}", r.heat_flows, r.flags);
                r
            })
            .collect()
    });

    let path = dir.join("sweep.csv");
    let mut wtr = csv_writer(&path)?;
    wtr.write_record(["param1", "param2", "J_L", "J_R", "imbalance", "residual", "min_eig_rho", "flag"])?;
    let mut failed = 0;
    for (&(v1, v2), r) in points.iter().zip(&results) {
        let flagged = !r.flags.is_empty();
        let j = |k| if flagged { f64::NAN } else { r.flow(k) };
        wtr.write_record([
            v1.to_string(),
            v2.map(|v| v.to_string()).unwrap_or_default(),
            j(0).to_string(),
            j(1).to_string(),
            r.imbalance.to_string(),
            r.residual.to_string(),
            r.min_eigenvalue.to_string(),
            r.flags.join(";"),
        ])?;
        if r.rho.is_none() {
            failed += 1;
            eprintln!("point ({name1} = {v1}{}) failed: {}", v2.map(|v| format!(", {v}")).unwrap_or_default(), r.flags.join("; "));
        }
    }
    wtr.flush().map_err(|e| CliError::Io(path.clone(), e))?;
    let flagged = results.iter().filter(|r| !r.flags.is_empty()).count();
    println!("{} points written to {} ({} flagged, {} failed)", points.len(), path.display(), flagged, failed);
    Ok(if failed > 0 { 1 } else { 0 })
}

// ---- blocks ------------------------------------------------------------------

#[derive(Serialize)]
struct BlockEntry {
    label: f64,
    size: usize,
}

#[derive(Serialize)]
struct BlocksReport {
    symmetry: &'static str,
    symmetric: bool,
    symmetry_residual: f64,
    hamiltonian_residual: f64,
    number_residual: Option<f64>,
    blocks: Vec<BlockEntry>,
    off_block_mass: Option<f64>,
    error: Option<String>,
}

fn blocks(cfg: &RunConfig, dir: &Path) -> Result<i32, CliError> {
    let prep = prepare(&cfg.model, cfg)?;
    let l = &prep.build.total;
    let tol = 1e-9;
    let hamiltonian_residual = check_operator_symmetry(l, &prep.h_basis, tol)?.residual;
    let number_residual = match &prep.number {
        Some(n) => Some(check_operator_symmetry(l, n, tol)?.residual),
        None => None,
    };
    let (name, j) = match (cfg.symmetry, &prep.number) {
        (SymmetryConfig::Number, Some(n)) => ("number", n),
        _ => ("hamiltonian", &prep.h_basis),
    };
    let residual = if name == "number" { number_residual.unwrap_or(f64::NAN) } else { hamiltonian_residual };
    let mut report = BlocksReport {
        symmetry: name,
        symmetric: residual < tol,
        symmetry_residual: residual,
        hamiltonian_residual,
        number_residual,
        blocks: Vec::new(),
        off_block_mass: None,
        error: None,
    };
    let status = match block_transform(l, j, tol) {
        Ok(dec) => {
            report.blocks = dec
                .block_labels
                .iter()
                .zip(&dec.block_ranges)
                .map(|(&label, r)| BlockEntry { label, size: r.len() })
                .collect();
            report.off_block_mass = Some(dec.off_block_mass);
            println!("{} blocks under the {name} symmetry, off-block mass {:e}", dec.blocks.len(), dec.off_block_mass);
            0
        }
        Err(e) => {
            eprintln!("no block decomposition: {e}");
            report.error = Some(e.to_string());
            1
        }
    };
    write_json(&dir.join("blocks.json"), &report)?;
    Ok(status)
}
