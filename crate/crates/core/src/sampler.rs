//! Metropolis–Hastings chains and exact sampling from the Born distribution.
//!
//! Each chain owns its configuration, its cached `lnψ` and a generator
//! seeded from `key.split(chain)`, so results do not depend on how chains
//! are scheduled across threads. Samples are returned chain-major.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::batch::Batch;
use crate::error::{Error, Result};
use crate::hilbert::{DiscreteHilbert, Hilbert};
use crate::lattice::Graph;
use crate::model::{log_psi_batch, BoundModel};
use crate::operator::{DiscreteOperator, DENSE_CAP};
use crate::rng::RngKey;
use crate::C64;

/// Proposal kernels. Each proposal also reports the log-correction `L` to
/// the acceptance ratio for asymmetric proposals.
#[derive(Clone)]
pub enum Rule {
    /// Change one site to a different local state.
    Local,
    /// Swap the values on a uniformly chosen eligible pair.
    Exchange { pairs: Vec<(usize, usize)> },
    /// Move to a uniformly chosen off-diagonal connection of the operator.
    Hamiltonian { op: Arc<dyn DiscreteOperator>, correct: bool },
    /// Shift every coordinate by `N(0, σ²)`, wrapping periodic axes.
    Gaussian { sigma: f64 },
}

impl std::fmt::Debug for Rule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Rule::Local => write!(f, "Local"),
            Rule::Exchange { pairs } => write!(f, "Exchange({} pairs)", pairs.len()),
            Rule::Hamiltonian { correct, .. } => write!(f, "Hamiltonian(correct={correct})"),
            Rule::Gaussian { sigma } => write!(f, "Gaussian({sigma})"),
        }
    }
}

impl Rule {
    /// Pairs of sites at graph distance `1..=d_max` over order-1 edges.
    pub fn exchange(graph: &Graph, d_max: usize) -> Result<Rule> {
        let mut pairs = Vec::new();
        for i in 0..graph.n_nodes() {
            for (j, d) in graph.bfs_distances(i).into_iter().enumerate().skip(i + 1) {
                if matches!(d, Some(d) if d >= 1 && d <= d_max) {
                    pairs.push((i, j));
                }
            }
        }
        if pairs.is_empty() {
            return Err(Error::InvalidArgument(format!("no site pairs within distance {d_max}")));
        }
        Ok(Rule::Exchange { pairs })
    }

    pub fn hamiltonian(op: Arc<dyn DiscreteOperator>) -> Rule {
        Rule::Hamiltonian { op, correct: true }
    }

    /// Hamiltonian moves without the connection-count correction. Only for
    /// demonstrating the bias it introduces.
    pub fn hamiltonian_uncorrected(op: Arc<dyn DiscreteOperator>) -> Rule {
        Rule::Hamiltonian { op, correct: false }
    }

    pub fn gaussian(sigma: f64) -> Result<Rule> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidArgument(format!("Gaussian step must be positive, got {sigma}")));
        }
        Ok(Rule::Gaussian { sigma })
    }

    fn check(&self, hilbert: &Hilbert) -> Result<()> {
        match (self, hilbert) {
            (Rule::Gaussian { .. }, Hilbert::Particle(_)) => Ok(()),
            (Rule::Gaussian { .. }, _) => Err(Error::Unsupported("Gaussian moves need a particle space".into())),
            (_, Hilbert::Particle(_)) => Err(Error::Unsupported("discrete rules need a discrete space".into())),
            (Rule::Exchange { pairs }, h) => match pairs.iter().find(|&&(i, j)| i.max(j) >= h.size()) {
                Some(p) => Err(Error::InvalidArgument(format!("exchange pair {p:?} outside {} sites", h.size()))),
                None => Ok(()),
            },
            (Rule::Hamiltonian { op, .. }, Hilbert::Discrete(h)) => {
                if op.hilbert().as_ref() != h.as_ref() {
                    Err(Error::HilbertMismatch)
                } else {
                    Ok(())
                }
            }
            (Rule::Local, Hilbert::Discrete(h)) => {
                if (0..h.size()).any(|i| h.local_dim(i) < 2) {
                    Err(Error::InvalidArgument("local moves need at least two local states per site".into()))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Writes a proposal into `out` and returns `L`.
    pub fn propose<R: Rng + ?Sized>(&self, hilbert: &Hilbert, s: &[f64], out: &mut [f64], rng: &mut R) -> Result<f64> {
        out.copy_from_slice(s);
        let l = match (self, hilbert) {
            (Rule::Local, Hilbert::Discrete(h)) => {
                let i = rng.random_range(0..h.size());
                let states = h.local_states(i);
                let cur = h.local_index(i, s[i]).ok_or_else(|| Error::InvalidConfig(format!("value {} at site {i}", s[i])))?;
                let mut k = rng.random_range(0..states.len() - 1);
                if k >= cur {
                    k += 1;
                }
                out[i] = states[k];
                0.0
            }
            (Rule::Exchange { pairs }, Hilbert::Discrete(_)) => {
                let (i, j) = pairs[rng.random_range(0..pairs.len())];
                out.swap(i, j);
                0.0
            }
            (Rule::Hamiltonian { op, correct }, Hilbert::Discrete(_)) => {
                let conn = op.get_conn(s)?;
                let n_here = conn.len() - 1;
                if n_here == 0 {
                    return Err(Error::InvalidArgument("operator has no off-diagonal connections here".into()));
                }
                out.copy_from_slice(conn.configs.row(1 + rng.random_range(0..n_here)));
                if *correct {
                    let n_there = op.get_conn(out)?.len() - 1;
                    (n_here as f64).ln() - (n_there as f64).ln()
                } else {
                    0.0
                }
            }
            (Rule::Gaussian { sigma }, Hilbert::Particle(h)) => {
                let normal = Normal::new(0.0, *sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
                for x in out.iter_mut() {
                    *x += normal.sample(rng);
                }
                h.wrap(out);
                0.0
            }
            _ => return Err(Error::Unsupported(format!("rule {self:?} does not apply to this space"))),
        };
        if let Hilbert::Discrete(h) = hilbert {
            if !h.contains(out) {
                return Err(Error::ConstraintViolation(format!("rule proposed {out:?}, outside the space")));
            }
        }
        Ok(l)
    }
}

#[derive(Clone, Debug)]
pub struct SamplerConfig {
    pub n_chains: usize,
    /// Micro-steps between emitted samples; `None` means the number of sites.
    pub n_sweeps: Option<usize>,
    pub rule: Rule,
}

#[derive(Clone, Debug)]
struct Chain {
    config: Vec<f64>,
    log_psi: C64,
    rng: ChaCha8Rng,
    accepted: u64,
    proposed: u64,
}

/// Mutable state of all chains.
#[derive(Clone, Debug)]
pub struct SamplerState {
    chains: Vec<Chain>,
}

impl SamplerState {
    pub fn configs(&self) -> Batch {
        let rows: Vec<&[f64]> = self.chains.iter().map(|c| c.config.as_slice()).collect();
        Batch::from_rows(&rows).unwrap()
    }

    pub fn accepted(&self) -> u64 {
        self.chains.iter().map(|c| c.accepted).sum()
    }

    pub fn proposed(&self) -> u64 {
        self.chains.iter().map(|c| c.proposed).sum()
    }

    /// Aggregate acceptance fraction since the last reset.
    pub fn acceptance(&self) -> f64 {
        let p = self.proposed();
        if p == 0 {
            0.0
        } else {
            self.accepted() as f64 / p as f64
        }
    }

    pub fn chain_acceptance(&self) -> Vec<f64> {
        self.chains
            .iter()
            .map(|c| if c.proposed == 0 { 0.0 } else { c.accepted as f64 / c.proposed as f64 })
            .collect()
    }

    pub fn reset_counters(&mut self) {
        for c in &mut self.chains {
            c.accepted = 0;
            c.proposed = 0;
        }
    }
}

/// Samples from one call, chain-major: rows `k·m..(k+1)·m` belong to chain `k`.
#[derive(Clone, Debug)]
pub struct Samples {
    pub configs: Batch,
    pub log_psi: Vec<C64>,
    pub n_chains: usize,
}

#[derive(Clone, Debug)]
pub struct MetropolisSampler {
    hilbert: Hilbert,
    config: SamplerConfig,
}

fn accept(u: f64, cur: C64, new: C64, l: f64) -> bool {
    if new.re == f64::NEG_INFINITY {
        return false;
    }
    if cur.re == f64::NEG_INFINITY {
        return true;
    }
    u < (2.0 * (new.re - cur.re) + l).exp()
}

impl MetropolisSampler {
    pub fn new(hilbert: impl Into<Hilbert>, config: SamplerConfig) -> Result<Self> {
        let hilbert = hilbert.into();
        if config.n_chains == 0 {
            return Err(Error::InvalidArgument("need at least one chain".into()));
        }
        if config.n_sweeps == Some(0) {
            return Err(Error::InvalidArgument("n_sweeps must be positive".into()));
        }
        config.rule.check(&hilbert)?;
        Ok(MetropolisSampler { hilbert, config })
    }

    pub fn hilbert(&self) -> &Hilbert {
        &self.hilbert
    }

    pub fn n_chains(&self) -> usize {
        self.config.n_chains
    }

    pub fn n_sweeps(&self) -> usize {
        self.config.n_sweeps.unwrap_or(self.hilbert.size())
    }

    pub fn rule(&self) -> &Rule {
        &self.config.rule
    }

    /// Chains start from uniformly drawn valid configurations.
    pub fn init_state(&self, key: RngKey) -> Result<SamplerState> {
        let chains = (0..self.config.n_chains)
            .map(|k| {
                let mut rng = key.split(k as u64).rng();
                let mut config = vec![0.0; self.hilbert.size()];
                self.hilbert.random_state_into(&mut rng, &mut config)?;
                Ok(Chain { config, log_psi: C64::new(0.0, 0.0), rng, accepted: 0, proposed: 0 })
            })
            .collect::<Result<_>>()?;
        Ok(SamplerState { chains })
    }

    fn step(&self, model: &dyn BoundModel, chain: &mut Chain, proposal: &mut [f64]) -> Result<()> {
        let l = self.config.rule.propose(&self.hilbert, &chain.config, proposal, &mut chain.rng)?;
        let new = model.log_psi(proposal);
        let u: f64 = chain.rng.random();
        chain.proposed += 1;
        if accept(u, chain.log_psi, new, l) {
            chain.config.copy_from_slice(proposal);
            chain.log_psi = new;
            chain.accepted += 1;
        }
        Ok(())
    }

    /// Runs `n_discard_per_chain · n_sweeps` burn-in steps per chain, then
    /// emits `n_samples / n_chains` configurations per chain, one every
    /// `n_sweeps` steps.
    pub fn sample(
        &self,
        model: &dyn BoundModel,
        state: &mut SamplerState,
        n_samples: usize,
        n_discard_per_chain: usize,
    ) -> Result<Samples> {
        let nc = self.config.n_chains;
        if n_samples == 0 || n_samples % nc != 0 {
            return Err(Error::InvalidArgument(format!("{n_samples} samples are not a positive multiple of {nc} chains")));
        }
        if state.chains.len() != nc {
            return Err(Error::ShapeMismatch(format!("state has {} chains, sampler {nc}", state.chains.len())));
        }
        let per_chain = n_samples / nc;
        let sweeps = self.n_sweeps();
        let width = self.hilbert.size();
        let out: Vec<Result<(Vec<f64>, Vec<C64>)>> = state
            .chains
            .par_iter_mut()
            .map(|chain| {
                // parameters may have changed since the last call
                chain.log_psi = model.log_psi(&chain.config);
                let mut proposal = vec![0.0; width];
                for _ in 0..n_discard_per_chain * sweeps {
                    self.step(model, chain, &mut proposal)?;
                }
                let mut configs = Vec::with_capacity(per_chain * width);
                let mut lp = Vec::with_capacity(per_chain);
                for _ in 0..per_chain {
                    for _ in 0..sweeps {
                        self.step(model, chain, &mut proposal)?;
                    }
                    configs.extend_from_slice(&chain.config);
                    lp.push(chain.log_psi);
                }
                Ok((configs, lp))
            })
            .collect();
        let mut data = Vec::with_capacity(n_samples * width);
        let mut log_psi = Vec::with_capacity(n_samples);
        for r in out {
            let (c, l) = r?;
            data.extend(c);
            log_psi.extend(l);
        }
        Ok(Samples { configs: Batch::from_vec(data, width)?, log_psi, n_chains: nc })
    }
}

/// Every basis state with its Born probability.
#[derive(Clone, Debug)]
pub struct FullSummation {
    pub configs: Batch,
    pub log_psi: Vec<C64>,
    pub weights: Vec<f64>,
}

fn enumerate(hilbert: &DiscreteHilbert) -> Result<Batch> {
    let n = hilbert.n_states()?;
    if n > DENSE_CAP {
        return Err(Error::CapExceeded { what: "basis size", value: n, limit: DENSE_CAP });
    }
    hilbert.all_states()
}

/// `pᵢ = |ψᵢ|² / Σ|ψ|²` over the enumeration order.
pub fn born_distribution(hilbert: &DiscreteHilbert, model: &dyn BoundModel) -> Result<FullSummation> {
    let configs = enumerate(hilbert)?;
    let log_psi = log_psi_batch(model, &configs, None);
    let m = log_psi.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return Err(Error::EstimatorSingular);
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("log-amplitude".into()));
    }
    let mut weights: Vec<f64> = log_psi.iter().map(|l| (2.0 * (l.re - m)).exp()).collect();
    let z: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= z);
    Ok(FullSummation { configs, log_psi, weights })
}

/// `n` independent draws from the Born distribution by inverse CDF.
pub fn exact_sample(hilbert: &DiscreteHilbert, model: &dyn BoundModel, key: RngKey, n: usize) -> Result<Samples> {
    let full = born_distribution(hilbert, model)?;
    let mut cdf = Vec::with_capacity(full.weights.len());
    let mut acc = 0.0;
    for w in &full.weights {
        acc += w;
        cdf.push(acc);
    }
    let mut rng = key.rng();
    let mut configs = Batch::with_capacity(hilbert.size(), n);
    let mut log_psi = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random::<f64>() * acc;
        let mut i = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        // never land on a zero-weight state through rounding
        while full.weights[i] == 0.0 && i > 0 {
            i -= 1;
        }
        configs.push(full.configs.row(i))?;
        log_psi.push(full.log_psi[i]);
    }
    Ok(Samples { configs, log_psi, n_chains: 1 })
}
