//! Run configuration: a versioned TOML schema with dotted-key overrides.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use toml::{Table, Value};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    #[serde(default)]
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub chunk_size: Option<usize>,
    #[serde(default)]
    pub csv: bool,
    #[serde(default)]
    pub observables: Vec<String>,
    pub system: SystemConfig,
    pub model: Option<ModelConfig>,
    pub sampler: Option<SamplerSection>,
    pub vmc: Option<VmcSection>,
    pub sr: Option<SrSection>,
    pub prepare: Option<VmcSection>,
    pub tdvp: Option<TdvpSection>,
    pub integrator: Option<IntegratorSection>,
    pub chartable: Option<ChartableSection>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub hilbert: Option<HilbertConfig>,
    pub lattice: Option<LatticeConfig>,
    pub hamiltonian: Option<HamiltonianConfig>,
}

fn half() -> f64 {
    0.5
}

fn yes() -> bool {
    true
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HilbertConfig {
    Spin {
        #[serde(default = "half")]
        s: f64,
        total_sz: Option<f64>,
    },
    Fock {
        n_max: usize,
        n_particles: Option<usize>,
    },
    Fermions {
        #[serde(default = "half")]
        s: f64,
        n_fermions: Option<Vec<usize>>,
    },
    Particles {
        n_particles: usize,
        dim: usize,
        extent: Option<Vec<f64>>,
        pbc: Option<Vec<bool>>,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LatticeConfig {
    Chain {
        length: usize,
        #[serde(default = "yes")]
        pbc: bool,
    },
    Square {
        length: usize,
        #[serde(default = "yes")]
        pbc: bool,
        #[serde(default = "one")]
        max_neighbor_order: usize,
    },
    Hypercube {
        length: usize,
        n_dim: usize,
        #[serde(default = "yes")]
        pbc: bool,
    },
    Triangular {
        extent: [usize; 2],
        #[serde(default = "yes")]
        pbc: bool,
    },
    Honeycomb {
        extent: [usize; 2],
        #[serde(default = "yes")]
        pbc: bool,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HamiltonianConfig {
    Ising {
        h: f64,
        #[serde(default = "unit")]
        j: f64,
    },
    Heisenberg {
        couplings: Vec<f64>,
    },
    Hubbard {
        t: f64,
        u: f64,
    },
    Harmonic {
        #[serde(default = "unit")]
        omega: f64,
        #[serde(default = "unit")]
        mass: f64,
    },
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum DTypeName {
    Real,
    #[default]
    Complex,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Rbm {
        #[serde(default = "unit")]
        alpha: f64,
        #[serde(default)]
        dtype: DTypeName,
        #[serde(default = "yes")]
        visible_bias: bool,
        #[serde(default = "yes")]
        hidden_bias: bool,
    },
    Jastrow {
        #[serde(default)]
        dtype: DTypeName,
    },
    RbmSymm {
        #[serde(default = "unit")]
        alpha: f64,
        #[serde(default)]
        dtype: DTypeName,
    },
    Gcnn {
        features: Vec<usize>,
        #[serde(default)]
        dtype: DTypeName,
        momentum: Option<Vec<f64>>,
        #[serde(default)]
        irrep: usize,
    },
    Gaussian {
        #[serde(default = "real")]
        dtype: DTypeName,
    },
}

fn real() -> DTypeName {
    DTypeName::Real
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    #[default]
    Metropolis,
    FullSummation,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum RuleName {
    #[default]
    Local,
    Exchange,
    Hamiltonian,
    Gaussian,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSection {
    #[serde(default)]
    pub kind: SamplerKind,
    #[serde(default)]
    pub rule: RuleName,
    #[serde(default = "default_chains")]
    pub n_chains: usize,
    pub n_sweeps: Option<usize>,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default = "default_discard")]
    pub n_discard_per_chain: usize,
    #[serde(default = "one")]
    pub d_max: usize,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
}

fn default_chains() -> usize {
    16
}

fn default_samples() -> usize {
    1024
}

fn default_discard() -> usize {
    16
}

fn default_sigma() -> f64 {
    0.1
}

impl Default for SamplerSection {
    fn default() -> Self {
        SamplerSection {
            kind: SamplerKind::default(),
            rule: RuleName::default(),
            n_chains: default_chains(),
            n_sweeps: None,
            n_samples: default_samples(),
            n_discard_per_chain: default_discard(),
            d_max: 1,
            sigma: default_sigma(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum PreconditionerName {
    #[default]
    Sr,
    None,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VmcSection {
    pub n_iter: usize,
    pub learning_rate: f64,
    #[serde(default)]
    pub preconditioner: PreconditionerName,
    /// Write the parameter snapshot every this many iterations.
    pub save_every: Option<usize>,
    /// Overrides the top-level `[sr]` section for this run.
    pub sr: Option<SrSection>,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SolverName {
    #[default]
    Cg,
    Cholesky,
    Svd,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum QgtName {
    #[default]
    Jacobian,
    OnTheFly,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SrSection {
    #[serde(default = "default_shift")]
    pub diag_shift: f64,
    #[serde(default)]
    pub solver: SolverName,
    #[serde(default = "default_tol")]
    pub tol: f64,
    pub maxiter: Option<usize>,
    #[serde(default = "default_rcond")]
    pub rcond: f64,
    #[serde(default)]
    pub qgt: QgtName,
}

fn default_shift() -> f64 {
    0.01
}

fn default_tol() -> f64 {
    1e-5
}

fn default_rcond() -> f64 {
    1e-10
}

impl Default for SrSection {
    fn default() -> Self {
        SrSection {
            diag_shift: default_shift(),
            solver: SolverName::default(),
            tol: default_tol(),
            maxiter: None,
            rcond: default_rcond(),
            qgt: QgtName::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum PropagationName {
    #[default]
    Real,
    Imaginary,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TdvpSection {
    pub t_end: f64,
    #[serde(default)]
    pub t0: f64,
    #[serde(default)]
    pub propagation: PropagationName,
    /// Hamiltonian driving the evolution; defaults to the system's.
    pub hamiltonian: Option<HamiltonianConfig>,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum NormName {
    #[default]
    Euclidean,
    Qgt,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default = "default_scheme")]
    pub scheme: String,
    pub dt: f64,
    #[serde(default)]
    pub adaptive: bool,
    #[serde(default = "default_atol")]
    pub atol: f64,
    #[serde(default = "default_atol")]
    pub rtol: f64,
    #[serde(default = "default_dt_min")]
    pub dt_min: f64,
    #[serde(default = "default_dt_max")]
    pub dt_max: f64,
    #[serde(default)]
    pub norm: NormName,
}

fn default_scheme() -> String {
    "heun".into()
}

fn default_atol() -> f64 {
    1e-6
}

fn default_dt_min() -> f64 {
    1e-8
}

fn default_dt_max() -> f64 {
    0.1
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartableSection {
    #[serde(default)]
    pub momenta: Vec<Vec<f64>>,
}

// Parses an override value as TOML, falling back to a bare string.
fn parse_value(raw: &str) -> Value {
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.into())),
        Err(_) => Value::String(raw.into()),
    }
}

/// Sets `dotted.key = value` in `table`, creating intermediate tables.
pub fn apply_override(table: &mut Table, spec: &str) -> Result<(), CliError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override '{spec}' is not of the form key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("override key '{key}' has an empty component")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = match entry {
            Value::Table(t) => t,
            _ => return Err(CliError::Config(format!("override key '{key}': '{p}' is not a table"))),
        };
    }
    cur.insert(parts[parts.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

impl RunConfig {
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let cfg: RunConfig = if overrides.is_empty() {
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?
        } else {
            let mut table: Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
            for o in overrides {
                apply_override(&mut table, o)?;
            }
            table.try_into().map_err(|e: toml::de::Error| CliError::Config(format!("after overrides: {e}")))?
        };
        if cfg.version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported config version {} (expected {SCHEMA_VERSION})",
                cfg.version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, overrides).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn sampler(&self) -> SamplerSection {
        self.sampler.clone().unwrap_or_default()
    }

    pub fn sr(&self) -> SrSection {
        self.sr.clone().unwrap_or_default()
    }
}
