//! Variational state: model, parameters and the source of samples.

use std::sync::Arc;

use super::stats::Stats;
use crate::batch::Batch;
use crate::error::{Error, Result};
use crate::hilbert::DiscreteHilbert;
use crate::model::{vjp_sum, BoundModel, Model, ParamTree};
use crate::operator::Observable;
use crate::qgt::Coords;
use crate::rng::RngKey;
use crate::sampler::{born_distribution, MetropolisSampler, SamplerState};
use crate::C64;

/// Configurations with normalized weights: uniform for Markov chains,
/// Born probabilities for full summation.
#[derive(Clone, Debug)]
pub struct Draw {
    pub configs: Batch,
    pub log_psi: Vec<C64>,
    pub weights: Vec<f64>,
    pub n_chains: usize,
    pub exact: bool,
}

#[derive(Clone, Debug)]
enum Source {
    MonteCarlo { sampler: MetropolisSampler, state: SamplerState, n_samples: usize, n_discard_per_chain: usize },
    FullSummation { hilbert: Arc<DiscreteHilbert> },
}

#[derive(Clone)]
pub struct VariationalState {
    model: Arc<dyn Model>,
    params: ParamTree,
    source: Source,
    chunk: Option<usize>,
    draw: Option<Draw>,
}

impl std::fmt::Debug for VariationalState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VariationalState")
            .field("model", &self.model.name())
            .field("n_params", &self.params.n_params())
            .field("source", &self.source)
            .finish()
    }
}

fn check_size(model: &dyn Model, size: usize) -> Result<()> {
    if model.input_size() != size {
        return Err(Error::ShapeMismatch(format!(
            "model expects {} inputs, space has {size} sites",
            model.input_size()
        )));
    }
    Ok(())
}

impl VariationalState {
    /// Parameters come from `model.init_params(key.split(0))` and chains are
    /// seeded from `key.split(1)`.
    pub fn monte_carlo(
        model: Arc<dyn Model>,
        sampler: MetropolisSampler,
        n_samples: usize,
        n_discard_per_chain: usize,
        key: RngKey,
    ) -> Result<Self> {
        check_size(model.as_ref(), sampler.hilbert().size())?;
        if n_samples == 0 || n_samples % sampler.n_chains() != 0 {
            return Err(Error::InvalidArgument(format!(
                "{n_samples} samples are not a positive multiple of {} chains",
                sampler.n_chains()
            )));
        }
        let params = model.init_params(key.split(0))?;
        let state = sampler.init_state(key.split(1))?;
        Ok(VariationalState {
            model,
            params,
            source: Source::MonteCarlo { sampler, state, n_samples, n_discard_per_chain },
            chunk: None,
            draw: None,
        })
    }

    /// Exact expectations over every basis state.
    pub fn full_summation(model: Arc<dyn Model>, hilbert: Arc<DiscreteHilbert>, key: RngKey) -> Result<Self> {
        check_size(model.as_ref(), hilbert.size())?;
        hilbert.n_states()?;
        let params = model.init_params(key.split(0))?;
        Ok(VariationalState { model, params, source: Source::FullSummation { hilbert }, chunk: None, draw: None })
    }

    pub fn with_chunk_size(mut self, chunk: Option<usize>) -> Self {
        self.chunk = chunk;
        self
    }

    pub fn chunk_size(&self) -> Option<usize> {
        self.chunk
    }

    pub fn model(&self) -> &Arc<dyn Model> {
        &self.model
    }

    pub fn params(&self) -> &ParamTree {
        &self.params
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.source, Source::FullSummation { .. })
    }

    /// Replaces the parameters; the layout must match.
    pub fn set_params(&mut self, params: ParamTree) -> Result<()> {
        if !params.same_layout(&self.params) {
            return Err(Error::ShapeMismatch("parameter layout differs from the model's".into()));
        }
        self.params = params;
        self.draw = None;
        Ok(())
    }

    pub fn set_flat_params(&mut self, flat: &[C64]) -> Result<()> {
        let p = self.params.with_flat(flat)?;
        self.set_params(p)
    }

    /// Solver coordinates for this model and parameter layout.
    pub fn coords(&self) -> Coords {
        Coords::for_model(self.model.is_holomorphic(), self.params.real_mask())
    }

    pub fn bound(&self) -> Result<Box<dyn BoundModel + '_>> {
        self.model.bind(&self.params)
    }

    /// Acceptance fraction of the last Monte Carlo draw.
    pub fn acceptance(&self) -> Option<f64> {
        match &self.source {
            Source::MonteCarlo { state, .. } => Some(state.acceptance()),
            Source::FullSummation { .. } => None,
        }
    }

    /// Draws fresh samples, or recomputes the Born weights.
    pub fn sample(&mut self) -> Result<&Draw> {
        let bound = self.model.bind(&self.params)?;
        let draw = match &mut self.source {
            Source::MonteCarlo { sampler, state, n_samples, n_discard_per_chain } => {
                state.reset_counters();
                let s = sampler.sample(&*bound, state, *n_samples, *n_discard_per_chain)?;
                let n = s.configs.len();
                Draw { configs: s.configs, log_psi: s.log_psi, weights: vec![1.0 / n as f64; n], n_chains: s.n_chains, exact: false }
            }
            Source::FullSummation { hilbert } => {
                let f = born_distribution(hilbert, &*bound)?;
                // states where ψ vanishes carry no weight and have no local estimator
                if f.log_psi.iter().any(|l| l.re == f64::NEG_INFINITY) {
                    let keep: Vec<usize> = (0..f.log_psi.len()).filter(|&i| f.log_psi[i].re != f64::NEG_INFINITY).collect();
                    let width = f.configs.row(0).len();
                    let data = keep.iter().flat_map(|&i| f.configs.row(i).iter().copied()).collect();
                    Draw {
                        configs: Batch::from_vec(data, width)?,
                        log_psi: keep.iter().map(|&i| f.log_psi[i]).collect(),
                        weights: keep.iter().map(|&i| f.weights[i]).collect(),
                        n_chains: 1,
                        exact: true,
                    }
                } else {
                    Draw { configs: f.configs, log_psi: f.log_psi, weights: f.weights, n_chains: 1, exact: true }
                }
            }
        };
        drop(bound);
        self.draw = Some(draw);
        Ok(self.draw.as_ref().unwrap())
    }

    /// The current draw, sampling first if the parameters changed.
    pub fn samples(&mut self) -> Result<&Draw> {
        if self.draw.is_none() {
            self.sample()?;
        }
        Ok(self.draw.as_ref().unwrap())
    }

    fn local_values(&mut self, op: &dyn Observable) -> Result<Vec<C64>> {
        self.samples()?;
        let draw = self.draw.as_ref().unwrap();
        let bound = self.model.bind(&self.params)?;
        op.local_values(&*bound, &draw.configs, &draw.log_psi, self.chunk)
    }

    fn stats(draw: &Draw, values: &[C64]) -> Stats {
        Stats::from_weighted(values, &draw.weights, draw.n_chains, draw.exact)
    }

    /// `⟨Ô⟩` over the current draw.
    pub fn expect(&mut self, op: &dyn Observable) -> Result<Stats> {
        let values = self.local_values(op)?;
        Ok(Self::stats(self.draw.as_ref().unwrap(), &values))
    }

    /// `f̃_k = E[O_k* (Ã − E[Ã])]` together with the statistics of `Ã`.
    pub fn expect_and_force(&mut self, op: &dyn Observable) -> Result<(Stats, Vec<C64>)> {
        let values = self.local_values(op)?;
        let draw = self.draw.as_ref().unwrap();
        let stats = Self::stats(draw, &values);
        let bound = self.model.bind(&self.params)?;
        // conj(Σ_i p_i O_i conj(ΔÃ_i))
        let coeffs: Vec<C64> = values.iter().zip(&draw.weights).map(|(v, w)| (v - stats.mean).conj() * *w).collect();
        let acc = vjp_sum(&*bound, &draw.configs, &coeffs);
        Ok((stats, acc.iter().map(|a| a.conj()).collect()))
    }

    /// Energy gradient: `f̃` for holomorphic parameters, `2 Re f̃` for real
    /// ones, and `2 f̃` (real and imaginary parts as two real coordinates)
    /// for complex parameters of non-holomorphic models.
    pub fn expect_and_grad(&mut self, op: &dyn Observable) -> Result<(Stats, Vec<C64>)> {
        let (stats, f) = self.expect_and_force(op)?;
        let coords = self.coords();
        if coords.is_holomorphic() {
            return Ok((stats, f));
        }
        let mask = self.params.real_mask();
        let g = f.iter().zip(&mask).map(|(v, &r)| if r { C64::new(2.0 * v.re, 0.0) } else { v * 2.0 }).collect();
        Ok((stats, g))
    }
}
