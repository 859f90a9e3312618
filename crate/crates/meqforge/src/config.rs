//! JSON run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use meqforge_core::bath::BathSpec;
use meqforge_core::models::{ChainParams, CouplingQuadrature, Mode};
use meqforge_core::operators::{annihilation, embed, pauli, CompositeSpace, Operator, Pauli};
use meqforge_core::secular::SecularPolicy;
use meqforge_core::solve::EnergyOperator;
use meqforge_core::c64;
use serde::Deserialize;

use crate::CliError;

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Chain,
    Custom,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ModeConfig {
    #[default]
    Global,
    Local,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicyConfig {
    Redfield,
    FullSecular,
    Partial { c: f64 },
    Unified { w: f64 },
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig::FullSecular
    }
}

impl From<PolicyConfig> for SecularPolicy {
    fn from(p: PolicyConfig) -> Self {
        match p {
            PolicyConfig::Redfield => SecularPolicy::Redfield,
            PolicyConfig::FullSecular => SecularPolicy::FullSecular,
            PolicyConfig::Partial { c } => SecularPolicy::Partial(c),
            PolicyConfig::Unified { w } => SecularPolicy::Unified(w),
        }
    }
}

/// Chain parameters; anything left out takes the usual defaults.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub omega1: Option<f64>,
    pub omega2: Option<f64>,
    /// Sets both resonator frequencies.
    #[serde(rename = "Omega")]
    pub omega: Option<f64>,
    #[serde(rename = "Omega_L")]
    pub omega_l: Option<f64>,
    #[serde(rename = "Omega_R")]
    pub omega_r: Option<f64>,
    /// Sets both qubit–resonator couplings.
    pub g: Option<f64>,
    pub g1: Option<f64>,
    pub g2: Option<f64>,
    pub g12: Option<f64>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[serde(rename = "T_L")]
    pub t_l: Option<f64>,
    #[serde(rename = "T_R")]
    pub t_r: Option<f64>,
    pub alpha: Option<f64>,
    #[serde(rename = "alpha_L")]
    pub alpha_l: Option<f64>,
    #[serde(rename = "alpha_R")]
    pub alpha_r: Option<f64>,
    pub chi: Option<f64>,
    pub omega_c: Option<f64>,
    pub coupling: Option<QuadratureConfig>,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum QuadratureConfig {
    Position,
    Momentum,
}

impl ChainConfig {
    pub fn params(&self) -> ChainParams {
        let mut p = ChainParams::default();
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut p.omega1, self.omega1);
        set(&mut p.omega2, self.omega2);
        set(&mut p.omega_l, self.omega);
        set(&mut p.omega_r, self.omega);
        set(&mut p.omega_l, self.omega_l);
        set(&mut p.omega_r, self.omega_r);
        set(&mut p.g1, self.g);
        set(&mut p.g2, self.g);
        set(&mut p.g1, self.g1);
        set(&mut p.g2, self.g2);
        set(&mut p.g12, self.g12);
        set(&mut p.t_l, self.t_l);
        set(&mut p.t_r, self.t_r);
        set(&mut p.alpha_l, self.alpha);
        set(&mut p.alpha_r, self.alpha);
        set(&mut p.alpha_l, self.alpha_l);
        set(&mut p.alpha_r, self.alpha_r);
        set(&mut p.chi, self.chi);
        set(&mut p.omega_c, self.omega_c);
        if let Some(n) = self.n {
            p.n = n;
        }
        if let Some(q) = self.coupling {
            p.coupling = match q {
                QuadratureConfig::Position => CouplingQuadrature::Position,
                QuadratureConfig::Momentum => CouplingQuadrature::Momentum,
            };
        }
        p
    }
}

/// A real number or a `[re, im]` pair.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Real(f64),
    Complex([f64; 2]),
}

impl Coefficient {
    fn value(self) -> c64 {
        match self {
            Coefficient::Real(r) => c64::new(r, 0.0),
            Coefficient::Complex([re, im]) => c64::new(re, im),
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum OpName {
    Sz,
    Sp,
    Sm,
    A,
    Adag,
    N,
    Id,
}

/// coefficient × Π factors, each factor a local operator on one site.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub coefficient: Coefficient,
    pub factors: Vec<(usize, OpName)>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    pub label: String,
    #[serde(rename = "T")]
    pub t: f64,
    pub alpha: f64,
    #[serde(default = "default_chi")]
    pub chi: f64,
    #[serde(default = "default_omega_c")]
    pub omega_c: f64,
    /// Each entry is one coupling operator A_β, given as a sum of terms.
    pub coupling: Vec<Vec<Term>>,
}

fn default_chi() -> f64 {
    0.1
}

fn default_omega_c() -> f64 {
    100.0
}

fn default_true() -> bool {
    true
}

/// Explicit grid values, or `linspace: [start, stop, points]`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: String,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub linspace: Option<(f64, f64, usize)>,
}

impl Axis {
    pub fn grid(&self) -> Result<Vec<f64>, String> {
        let v = match (&self.values, self.linspace) {
            (Some(v), None) => v.clone(),
            (None, Some((a, b, n))) => match n {
                0 => Vec::new(),
                1 => vec![a],
                _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
            },
            _ => return Err(format!("axis {} needs exactly one of values or linspace", self.name)),
        };
        if v.is_empty() {
            return Err(format!("axis {} is empty", self.name));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(format!("axis {} has non-finite values", self.name));
        }
        let up = v.windows(2).all(|p| p[1] > p[0]);
        let down = v.windows(2).all(|p| p[1] < p[0]);
        if !(up || down) {
            return Err(format!("axis {} is not monotone", self.name));
        }
        Ok(v)
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub param1: Axis,
    #[serde(default)]
    pub param2: Option<Axis>,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum SymmetryConfig {
    /// Total excitation number (chain only).
    #[default]
    Number,
    Hamiltonian,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub model: ModelKind,
    #[serde(default)]
    pub chain: Option<ChainConfig>,
    #[serde(default)]
    pub dims: Option<Vec<usize>>,
    #[serde(default)]
    pub hamiltonian: Option<Vec<Term>>,
    /// Interaction-free Hamiltonian for local builds of custom models.
    #[serde(default)]
    pub bare_hamiltonian: Option<Vec<Term>>,
    #[serde(default)]
    pub baths: Option<Vec<BathConfig>>,
    #[serde(default)]
    pub policy: PolicyConfig,
    #[serde(default)]
    pub mode: ModeConfig,
    #[serde(default = "default_true")]
    pub include_lamb_shift: bool,
    /// Energy operator of the heat currents.
    #[serde(default)]
    pub energy_operator: EnergyConfig,
    /// Residual tolerance of the steady-state solve.
    #[serde(default)]
    pub tol: Option<f64>,
    /// Cluster width for the `spectrum` report when the policy has none.
    #[serde(default)]
    pub cluster_width: Option<f64>,
    #[serde(default)]
    pub symmetry: Option<SymmetryConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub outputs: OutputsConfig,
}

#[derive(Deserialize, Debug, Clone, Copy, Default)]
#[serde(rename_all = "snake_case")]
pub enum EnergyConfig {
    #[default]
    System,
    SystemWithLambShift,
}

/// A custom model assembled into operators.
#[derive(Clone, Debug)]
pub struct CustomModel {
    pub space: CompositeSpace,
    pub hamiltonian: Operator,
    pub bare_hamiltonian: Option<Operator>,
    pub baths: Vec<BathSpec>,
    pub raw_baths: Vec<BathConfig>,
}

#[derive(Clone, Debug)]
pub enum Model {
    Chain(ChainParams),
    Custom(CustomModel),
}

/// Validated configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub model: Model,
    pub policy: SecularPolicy,
    pub mode: Mode,
    pub include_lamb_shift: bool,
    pub energy: EnergyOperator,
    pub tol: f64,
    pub cluster_width: f64,
    pub symmetry: SymmetryConfig,
    pub sweep: Option<(String, Vec<f64>, Option<(String, Vec<f64>)>)>,
    pub out_dir: Option<PathBuf>,
}

pub fn parse_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let mut path = e.path().to_string();
        let inner = e.into_inner();
        let message = inner.to_string();
        // point at the missing key itself
        if let Some(field) = message.strip_prefix("missing field `").and_then(|r| r.split('`').next()) {
            path = if path == "." { field.to_string() } else { format!("{path}.{field}") };
        }
        CliError::Config { path, message }
    })?;
    validate(raw)
}

fn config_err(path: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Config { path: path.into(), message: message.into() }
}

fn local_op(name: OpName, dim: usize) -> Result<Operator, String> {
    let qubit = |p| {
        if dim == 2 {
            Ok(pauli(p))
        } else {
            Err(format!("operator {name:?} needs a two-level site, site has dimension {dim}"))
        }
    };
    let a = || annihilation(dim).map_err(|e| e.to_string());
    match name {
        OpName::Sz => qubit(Pauli::Z),
        OpName::Sp => qubit(Pauli::Plus),
        OpName::Sm => qubit(Pauli::Minus),
        OpName::A => a(),
        OpName::Adag => Ok(a()?.adjoint()),
        OpName::N => {
            let a = a()?;
            Ok(&a.adjoint() * &a)
        }
        OpName::Id => Ok(Operator::identity(&CompositeSpace::single(dim).map_err(|e| e.to_string())?)),
    }
}

fn assemble(terms: &[Term], space: &CompositeSpace, path: &str) -> Result<Operator, CliError> {
    let mut acc = Operator::zeros(space);
    for (k, t) in terms.iter().enumerate() {
        let mut op = Operator::identity(space);
        for (f, &(site, name)) in t.factors.iter().enumerate() {
            let at = format!("{path}[{k}].factors[{f}]");
            let dim = *space
                .dims()
                .get(site)
                .ok_or_else(|| config_err(&at, format!("site {site} out of range for {} sites", space.dims().len())))?;
            let local = local_op(name, dim).map_err(|m| config_err(&at, m))?;
            let e = embed(&local, site, space).map_err(|e| config_err(&at, e.to_string()))?;
            op = &op * &e;
        }
        acc = &acc + &op.scale(t.coefficient.value());
    }
    Ok(acc)
}

fn hermitian(op: Operator, path: &str) -> Result<Operator, CliError> {
    if op.is_hermitian(1e-12) {
        Ok(op)
    } else {
        Err(config_err(path, format!("assembled operator is not Hermitian (residual {:e})", op.hermiticity_residual())))
    }
}

fn build_baths(raw: &[BathConfig], space: &CompositeSpace) -> Result<Vec<BathSpec>, CliError> {
    let mut out = Vec::with_capacity(raw.len());
    for (i, b) in raw.iter().enumerate() {
        let mut ops = Vec::with_capacity(b.coupling.len());
        for (k, terms) in b.coupling.iter().enumerate() {
            let path = format!("baths[{i}].coupling[{k}]");
            ops.push(hermitian(assemble(terms, space, &path)?, &path)?);
        }
        let spec = BathSpec::new(&b.label, b.t, b.alpha, b.chi, b.omega_c, ops)
            .map_err(|e| config_err(format!("baths[{i}]"), e.to_string()))?;
        out.push(spec);
    }
    Ok(out)
}

impl CustomModel {
    /// Rebuilds the baths after temperatures or couplings changed.
    pub fn with_baths(&self, raw: Vec<BathConfig>) -> Result<CustomModel, CliError> {
        let baths = build_baths(&raw, &self.space)?;
        Ok(CustomModel { baths, raw_baths: raw, ..self.clone() })
    }
}

fn validate(raw: RawConfig) -> Result<RunConfig, CliError> {
    let model = match raw.model {
        ModelKind::Chain => {
            for (name, present) in [
                ("dims", raw.dims.is_some()),
                ("hamiltonian", raw.hamiltonian.is_some()),
                ("bare_hamiltonian", raw.bare_hamiltonian.is_some()),
                ("baths", raw.baths.is_some()),
            ] {
                if present {
                    return Err(config_err(name, "not used by the chain model"));
                }
            }
            let p = raw.chain.clone().unwrap_or_default().params();
            p.validate().map_err(|e| config_err("chain", e.to_string()))?;
            Model::Chain(p)
        }
        ModelKind::Custom => {
            if raw.chain.is_some() {
                return Err(config_err("chain", "not used by the custom model"));
            }
            let dims = raw.dims.clone().ok_or_else(|| config_err("dims", "missing field `dims`"))?;
            let space = CompositeSpace::new(dims).map_err(|e| config_err("dims", e.to_string()))?;
            let terms = raw.hamiltonian.as_ref().ok_or_else(|| config_err("hamiltonian", "missing field `hamiltonian`"))?;
            let hamiltonian = hermitian(assemble(terms, &space, "hamiltonian")?, "hamiltonian")?;
            let bare_hamiltonian = match &raw.bare_hamiltonian {
                Some(t) => Some(hermitian(assemble(t, &space, "bare_hamiltonian")?, "bare_hamiltonian")?),
                None => None,
            };
            if raw.mode == ModeConfig::Local && bare_hamiltonian.is_none() {
                return Err(config_err("bare_hamiltonian", "local mode needs a bare Hamiltonian for custom models"));
            }
            let raw_baths = raw.baths.clone().ok_or_else(|| config_err("baths", "missing field `baths`"))?;
            let baths = build_baths(&raw_baths, &space)?;
            Model::Custom(CustomModel { space, hamiltonian, bare_hamiltonian, baths, raw_baths })
        }
    };
    let policy: SecularPolicy = raw.policy.into();
    policy.validate().map_err(|e| config_err("policy", e.to_string()))?;
    let cluster_width = match (raw.cluster_width, policy) {
        (Some(w), _) => w,
        (None, SecularPolicy::Unified(w)) => w,
        (None, _) => 0.05,
    };
    if !(cluster_width > 0.0 && cluster_width.is_finite()) {
        return Err(config_err("cluster_width", "must be positive"));
    }
    let tol = raw.tol.unwrap_or(1e-10);
    if !(tol > 0.0) {
        return Err(config_err("tol", "must be positive"));
    }
    let symmetry = match (&model, raw.symmetry) {
        (Model::Custom(_), Some(SymmetryConfig::Number)) => {
            return Err(config_err("symmetry", "the number symmetry is only defined for the chain model"));
        }
        (Model::Custom(_), _) => SymmetryConfig::Hamiltonian,
        (Model::Chain(_), s) => s.unwrap_or_default(),
    };
    let sweep = match &raw.sweep {
        None => None,
        Some(s) => {
            let first = s.param1.grid().map_err(|m| config_err("sweep.param1", m))?;
            check_name(&model, &s.param1.name).map_err(|m| config_err("sweep.param1.name", m))?;
            let second = match &s.param2 {
                None => None,
                Some(a) => {
                    let g = a.grid().map_err(|m| config_err("sweep.param2", m))?;
                    check_name(&model, &a.name).map_err(|m| config_err("sweep.param2.name", m))?;
                    if a.name == s.param1.name {
                        return Err(config_err("sweep.param2.name", "both axes sweep the same parameter"));
                    }
                    Some((a.name.clone(), g))
                }
            };
            Some((s.param1.name.clone(), first, second))
        }
    };
    Ok(RunConfig {
        model,
        policy,
        mode: match raw.mode {
            ModeConfig::Global => Mode::Global,
            ModeConfig::Local => Mode::Local,
        },
        include_lamb_shift: raw.include_lamb_shift,
        energy: match raw.energy_operator {
            EnergyConfig::System => EnergyOperator::System,
            EnergyConfig::SystemWithLambShift => EnergyOperator::SystemWithLambShift,
        },
        tol,
        cluster_width,
        symmetry,
        sweep,
        out_dir: raw.outputs.dir.clone(),
    })
}

pub const CHAIN_PARAMETERS: [&str; 17] = [
    "omega1", "omega2", "Omega", "Omega_L", "Omega_R", "g", "g1", "g2", "g12", "T_L", "T_R", "alpha", "alpha_L",
    "alpha_R", "chi", "omega_c", "N",
];

fn check_name(model: &Model, name: &str) -> Result<(), String> {
    match model {
        Model::Chain(_) => {
            if CHAIN_PARAMETERS.contains(&name) {
                Ok(())
            } else {
                Err(format!("unknown chain parameter {name}; expected one of {}", CHAIN_PARAMETERS.join(", ")))
            }
        }
        Model::Custom(c) => {
            let (label, field) = name
                .rsplit_once('.')
                .ok_or_else(|| format!("custom sweeps take <bath label>.T or <bath label>.alpha, got {name}"))?;
            if !matches!(field, "T" | "alpha") {
                return Err(format!("cannot sweep {field}; use T or alpha"));
            }
            if !c.raw_baths.iter().any(|b| b.label == label) {
                return Err(format!("no bath labelled {label}"));
            }
            Ok(())
        }
    }
}

/// The model with one named parameter replaced.
pub fn with_parameter(model: &Model, name: &str, value: f64) -> Result<Model, CliError> {
    match model {
        Model::Chain(p) => {
            let mut p = p.clone();
            match name {
                "omega1" => p.omega1 = value,
                "omega2" => p.omega2 = value,
                "Omega" => {
                    p.omega_l = value;
                    p.omega_r = value;
                }
                "Omega_L" => p.omega_l = value,
                "Omega_R" => p.omega_r = value,
                "g" => {
                    p.g1 = value;
                    p.g2 = value;
                }
                "g1" => p.g1 = value,
                "g2" => p.g2 = value,
                "g12" => p.g12 = value,
                "T_L" => p.t_l = value,
                "T_R" => p.t_r = value,
                "alpha" => {
                    p.alpha_l = value;
                    p.alpha_r = value;
                }
                "alpha_L" => p.alpha_l = value,
                "alpha_R" => p.alpha_r = value,
                "chi" => p.chi = value,
                "omega_c" => p.omega_c = value,
                "N" => {
                    if value.fract() != 0.0 || value < 2.0 {
                        return Err(config_err("sweep", format!("N must be an integer >= 2, got {value}")));
                    }
                    p.n = value as usize;
                }
                other => return Err(config_err("sweep", format!("unknown chain parameter {other}"))),
            }
            p.validate().map_err(|e| config_err("sweep", e.to_string()))?;
            Ok(Model::Chain(p))
        }
        Model::Custom(c) => {
            let (label, field) = name.rsplit_once('.').unwrap_or((name, ""));
            let mut raw = c.raw_baths.clone();
            let b = raw
                .iter_mut()
                .find(|b| b.label == label)
                .ok_or_else(|| config_err("sweep", format!("no bath labelled {label}")))?;
            match field {
                "T" => b.t = value,
                "alpha" => b.alpha = value,
                other => return Err(config_err("sweep", format!("cannot sweep {other}"))),
            }
            Ok(Model::Custom(c.with_baths(raw)?))
        }
    }
}

/// Bath labels in build order, for reports.
pub fn bath_labels(model: &Model) -> Vec<String> {
    match model {
        Model::Chain(_) => vec!["L".into(), "R".into()],
        Model::Custom(c) => c.baths.iter().map(|b| b.label.clone()).collect(),
    }
}

/// Bath temperatures by label.
pub fn bath_temperatures(model: &Model) -> BTreeMap<String, f64> {
    match model {
        Model::Chain(p) => [("L".to_string(), p.t_l), ("R".to_string(), p.t_r)].into_iter().collect(),
        Model::Custom(c) => c.raw_baths.iter().map(|b| (b.label.clone(), b.t)).collect(),
    }
}
