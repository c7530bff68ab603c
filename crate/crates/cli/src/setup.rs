//! Builds core objects from a [`RunConfig`].

use std::path::Path;
use std::sync::Arc;

use nqs_core::driver::{QgtKind, Sr, VariationalState};
use nqs_core::hilbert::{DiscreteHilbert, Hilbert, ParticleHilbert};
use nqs_core::lattice::Lattice;
use nqs_core::model::{DType, Gaussian, Gcnn, Jastrow, Model, ParamTree, Rbm, RbmSymm};
use nqs_core::operator::{
    fermi_hubbard, heisenberg, ising, total_sigma_x, total_sigma_z, ContinuousOperator, DiscreteOperator,
    FermionOperator2nd, LocalOperator, Observable,
};
use nqs_core::qgt::Solver;
use nqs_core::sampler::{MetropolisSampler, Rule, SamplerConfig};
use nqs_core::symmetry::SpaceGroup;
use nqs_core::RngKey;

use crate::config::*;
use crate::error::{CliError, Result};

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// A Hamiltonian together with its concrete representation.
#[derive(Clone)]
pub enum Ham {
    Local(Arc<LocalOperator>),
    Fermion(Arc<FermionOperator2nd>),
    Continuous(Arc<ContinuousOperator>),
}

impl Ham {
    pub fn observable(&self) -> Arc<dyn Observable> {
        match self {
            Ham::Local(o) => o.clone(),
            Ham::Fermion(o) => o.clone(),
            Ham::Continuous(o) => o.clone(),
        }
    }

    pub fn discrete(&self) -> Option<Arc<dyn DiscreteOperator>> {
        match self {
            Ham::Local(o) => Some(o.clone()),
            Ham::Fermion(o) => Some(o.clone()),
            Ham::Continuous(_) => None,
        }
    }
}

pub struct System {
    pub hilbert: Hilbert,
    pub lattice: Option<Lattice>,
    pub hamiltonian: Option<Ham>,
}

impl System {
    pub fn hamiltonian(&self) -> Result<&Ham> {
        self.hamiltonian.as_ref().ok_or_else(|| config_err("missing system.hamiltonian"))
    }

    pub fn lattice(&self) -> Result<&Lattice> {
        self.lattice.as_ref().ok_or_else(|| config_err("missing system.lattice"))
    }

    pub fn discrete(&self) -> Result<&Arc<DiscreteHilbert>> {
        self.hilbert.as_discrete().ok_or_else(|| config_err("this run needs a discrete Hilbert space"))
    }
}

pub fn build_lattice(cfg: &LatticeConfig) -> Result<Lattice> {
    Ok(match *cfg {
        LatticeConfig::Chain { length, pbc } => Lattice::chain(length, pbc)?,
        LatticeConfig::Square { length, pbc, max_neighbor_order } => {
            Lattice::hypercube_with_order(length, 2, pbc, max_neighbor_order)?
        }
        LatticeConfig::Hypercube { length, n_dim, pbc } => Lattice::hypercube(length, n_dim, pbc)?,
        LatticeConfig::Triangular { extent, pbc } => Lattice::triangular(extent, pbc, 1)?,
        LatticeConfig::Honeycomb { extent, pbc } => Lattice::honeycomb(extent, pbc, 1)?,
    })
}

fn build_hilbert(cfg: &HilbertConfig, lattice: Option<&Lattice>) -> Result<Hilbert> {
    let sites = || {
        lattice.map(|l| l.n_nodes()).ok_or_else(|| config_err("a lattice Hilbert space needs system.lattice"))
    };
    Ok(match cfg {
        HilbertConfig::Spin { s, total_sz } => match total_sz {
            Some(m) => DiscreteHilbert::spin_with_total_sz(*s, sites()?, *m)?.into(),
            None => DiscreteHilbert::spin(*s, sites()?)?.into(),
        },
        HilbertConfig::Fock { n_max, n_particles } => match n_particles {
            Some(p) => DiscreteHilbert::fock_with_population(*n_max, sites()?, *p)?.into(),
            None => DiscreteHilbert::fock(*n_max, sites()?)?.into(),
        },
        HilbertConfig::Fermions { s, n_fermions } => {
            DiscreteHilbert::spin_orbital_fermions(sites()?, *s, n_fermions.as_deref())?.into()
        }
        HilbertConfig::Particles { n_particles, dim, extent, pbc } => {
            let extent = extent.clone().unwrap_or_else(|| vec![f64::INFINITY; *dim]);
            let pbc = pbc.clone().unwrap_or_else(|| vec![false; *dim]);
            if extent.len() != *dim || pbc.len() != *dim {
                return Err(config_err(format!("particles: extent and pbc need {dim} entries")));
            }
            ParticleHilbert::new(*n_particles, &extent, &pbc)?.into()
        }
    })
}

pub fn build_hamiltonian(cfg: &HamiltonianConfig, hilbert: &Hilbert, lattice: Option<&Lattice>) -> Result<Ham> {
    let graph = || {
        lattice.map(|l| l.graph()).ok_or_else(|| config_err("a lattice Hamiltonian needs system.lattice"))
    };
    let discrete = || hilbert.as_discrete().cloned().ok_or_else(|| config_err("a lattice Hamiltonian needs a discrete space"));
    Ok(match cfg {
        HamiltonianConfig::Ising { h, j } => Ham::Local(Arc::new(ising(discrete()?, graph()?, *h, *j)?)),
        HamiltonianConfig::Heisenberg { couplings } => {
            Ham::Local(Arc::new(heisenberg(discrete()?, graph()?, couplings)?))
        }
        HamiltonianConfig::Hubbard { t, u } => Ham::Fermion(Arc::new(fermi_hubbard(discrete()?, graph()?, *t, *u)?)),
        HamiltonianConfig::Harmonic { omega, mass } => {
            let Hilbert::Particle(ph) = hilbert else {
                return Err(config_err("the harmonic Hamiltonian needs a particle space"));
            };
            let k = 0.5 * mass * omega * omega;
            let v = ContinuousOperator::potential(ph.clone(), Arc::new(move |x: &[f64]| k * x.iter().map(|y| y * y).sum::<f64>()));
            Ham::Continuous(Arc::new(ContinuousOperator::kinetic(ph.clone(), &[*mass])?.add(&v)?))
        }
    })
}

pub fn build_system(cfg: &RunConfig) -> Result<System> {
    let lattice = cfg.system.lattice.as_ref().map(build_lattice).transpose()?;
    let hcfg = cfg.system.hilbert.as_ref().ok_or_else(|| config_err("missing system.hilbert"))?;
    let hilbert = build_hilbert(hcfg, lattice.as_ref())?;
    let hamiltonian = cfg
        .system
        .hamiltonian
        .as_ref()
        .map(|h| build_hamiltonian(h, &hilbert, lattice.as_ref()))
        .transpose()?;
    Ok(System { hilbert, lattice, hamiltonian })
}

fn dtype(d: DTypeName) -> DType {
    match d {
        DTypeName::Real => DType::F64,
        DTypeName::Complex => DType::C64,
    }
}

pub fn build_model(cfg: &RunConfig, sys: &System) -> Result<Arc<dyn Model>> {
    let n = sys.hilbert.size();
    let mcfg = cfg.model.as_ref().ok_or_else(|| config_err("missing [model] section"))?;
    let space_group = || -> Result<SpaceGroup> { Ok(SpaceGroup::new(sys.lattice()?, None)?) };
    Ok(match mcfg {
        ModelConfig::Rbm { alpha, dtype: d, visible_bias, hidden_bias } => {
            Arc::new(Rbm::new(n, *alpha, dtype(*d)).visible_bias(*visible_bias).hidden_bias(*hidden_bias))
        }
        ModelConfig::Jastrow { dtype: d } => Arc::new(Jastrow::new(n, dtype(*d))),
        ModelConfig::RbmSymm { alpha, dtype: d } => {
            Arc::new(RbmSymm::from_alpha(Arc::new(space_group()?.group().clone()), *alpha, dtype(*d)))
        }
        ModelConfig::Gcnn { features, dtype: d, momentum, irrep } => {
            let sg = space_group()?;
            let group = Arc::new(sg.group().clone());
            match momentum {
                Some(k) => {
                    let chars = sg.irrep_characters(k, *irrep)?;
                    Arc::new(Gcnn::new(group, features.clone(), chars, dtype(*d))?)
                }
                None => Arc::new(Gcnn::invariant(group, features.clone(), dtype(*d))?),
            }
        }
        ModelConfig::Gaussian { dtype: d } => Arc::new(Gaussian::new(n, dtype(*d))),
    })
}

pub fn build_state(cfg: &RunConfig, sys: &System) -> Result<VariationalState> {
    let model = build_model(cfg, sys)?;
    let key = RngKey::new(cfg.seed);
    let sc = cfg.sampler();
    let state = match sc.kind {
        SamplerKind::FullSummation => VariationalState::full_summation(model, sys.discrete()?.clone(), key)?,
        SamplerKind::Metropolis => {
            let rule = match sc.rule {
                RuleName::Local => Rule::Local,
                RuleName::Exchange => Rule::exchange(sys.lattice()?.graph(), sc.d_max)?,
                RuleName::Hamiltonian => Rule::hamiltonian(
                    sys.hamiltonian()?.discrete().ok_or_else(|| config_err("the hamiltonian rule needs a discrete operator"))?,
                ),
                RuleName::Gaussian => Rule::gaussian(sc.sigma)?,
            };
            let sampler = MetropolisSampler::new(
                sys.hilbert.clone(),
                SamplerConfig { n_chains: sc.n_chains, n_sweeps: sc.n_sweeps, rule },
            )?;
            VariationalState::monte_carlo(model, sampler, sc.n_samples, sc.n_discard_per_chain, key)?
        }
    };
    Ok(state.with_chunk_size(cfg.chunk_size))
}

pub fn build_sr(cfg: &SrSection) -> Sr {
    let solver = match cfg.solver {
        SolverName::Cg => Solver::Cg { tol: cfg.tol, maxiter: cfg.maxiter },
        SolverName::Cholesky => Solver::Cholesky,
        SolverName::Svd => Solver::Svd { rcond: cfg.rcond },
    };
    let qgt = match cfg.qgt {
        QgtName::Jacobian => QgtKind::Jacobian,
        QgtName::OnTheFly => QgtKind::OnTheFly,
    };
    Sr::new(cfg.diag_shift).with_solver(solver).with_qgt(qgt)
}

pub type NamedObservable = (String, Arc<dyn Observable>);

pub fn build_observables(cfg: &RunConfig, sys: &System) -> Result<Vec<NamedObservable>> {
    cfg.observables
        .iter()
        .map(|name| {
            let h = sys.discrete()?.clone();
            let op: Arc<dyn Observable> = match name.as_str() {
                "Sx" => Arc::new(total_sigma_x(h)?),
                "Sz" => Arc::new(total_sigma_z(h)?),
                other => return Err(config_err(format!("unknown observable '{other}' (known: Sx, Sz)"))),
            };
            Ok((name.clone(), op))
        })
        .collect()
}

fn describe(p: &ParamTree) -> Vec<String> {
    p.specs().iter().map(|s| format!("{}{:?}:{:?}", s.path, s.shape, s.dtype)).collect()
}

/// Explains how two layouts differ, leaf by leaf.
pub fn layout_diff(expected: &ParamTree, found: &ParamTree) -> String {
    let exp = expected.specs();
    let got = found.specs();
    let mut lines = vec![];
    for e in &exp {
        match got.iter().find(|g| g.path == e.path) {
            None => lines.push(format!("leaf '{}' missing from snapshot", e.path)),
            Some(g) if g != e => lines.push(format!(
                "leaf '{}': model expects {:?} {:?}, snapshot has {:?} {:?}",
                e.path, e.shape, e.dtype, g.shape, g.dtype
            )),
            _ => {}
        }
    }
    for g in &got {
        if !exp.iter().any(|e| e.path == g.path) {
            lines.push(format!("leaf '{}' in snapshot is not part of the model", g.path));
        }
    }
    if lines.is_empty() {
        lines.push(format!("leaf order differs: model {:?}, snapshot {:?}", describe(expected), describe(found)));
    }
    lines.join("; ")
}

pub fn read_params(path: &Path) -> Result<ParamTree> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    ParamTree::from_bytes(&bytes).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

/// Loads a snapshot into `state`, checking only that the layouts agree.
pub fn load_params(path: &Path, state: &mut VariationalState) -> Result<()> {
    let p = read_params(path)?;
    if !p.same_layout(state.params()) {
        return Err(config_err(format!(
            "{}: snapshot does not fit the model: {}",
            path.display(),
            layout_diff(state.params(), &p)
        )));
    }
    state.set_params(p)?;
    Ok(())
}
