//! Time-dependent variational principle in real or imaginary time.

use std::sync::Arc;

use super::integrator::{euclidean_norm, integrate, IntegrationReport, OdeSystem, Scheme, StepControl};
use super::state::VariationalState;
use super::stats::{RunLog, Stats};
use super::vmc::Sr;
use crate::error::{Error, Result};
use crate::operator::Observable;
use crate::qgt::{Qgt, QgtJacobian};
use crate::C64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Propagation {
    /// `i ∂ψ/∂t = Hψ`.
    #[default]
    Real,
    /// `∂ψ/∂τ = −Hψ`.
    Imaginary,
}

impl Propagation {
    /// Prefactor `γ` in `G θ̇ = γ f̃`.
    pub fn gamma(&self) -> C64 {
        match self {
            Propagation::Real => C64::new(0.0, -1.0),
            Propagation::Imaginary => C64::new(-1.0, 0.0),
        }
    }
}

/// Norm for adaptive error control.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ErrorNorm {
    #[default]
    Euclidean,
    /// `‖v‖² = Re v† G v` with the tensor of the step's first stage.
    Qgt,
}

pub struct Tdvp {
    hamiltonian: Arc<dyn Observable>,
    propagation: Propagation,
    scheme: Scheme,
    control: StepControl,
    sr: Sr,
    norm: ErrorNorm,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TdvpReport {
    pub steps: IntegrationReport,
    /// Accepted step sizes in order.
    pub dts: Vec<f64>,
}

impl Tdvp {
    pub fn new(hamiltonian: Arc<dyn Observable>, propagation: Propagation, scheme: Scheme, control: StepControl, sr: Sr) -> Self {
        Tdvp { hamiltonian, propagation, scheme, control, sr, norm: ErrorNorm::Euclidean }
    }

    pub fn with_error_norm(mut self, norm: ErrorNorm) -> Self {
        self.norm = norm;
        self
    }

    /// `θ̇ = (G + εI)⁻¹ γ f̃` on the state's current samples.
    pub fn time_derivative(&self, state: &mut VariationalState) -> Result<(Stats, Vec<C64>)> {
        let (energy, force) = state.expect_and_force(self.hamiltonian.as_ref())?;
        let g = self.propagation.gamma();
        let rhs: Vec<C64> = force.iter().map(|f| f * g).collect();
        let (d, _) = self.sr.solve(state, &rhs)?;
        Ok((energy, d))
    }

    /// Evolves `state` from `t0` to `t_end`, logging the energy and
    /// `observables` at the start of every accepted step and once at the
    /// end. `callback` runs after every accepted step with the new time.
    pub fn run(
        &self,
        state: &mut VariationalState,
        t0: f64,
        t_end: f64,
        observables: &[(&str, &dyn Observable)],
        log: &mut RunLog,
        callback: &mut dyn FnMut(f64, &VariationalState) -> Result<()>,
    ) -> Result<TdvpReport> {
        let y0 = state.params().as_slice().to_vec();
        let mut sys = System { tdvp: self, state, observables, log, callback, pending: None, metric: None, dts: vec![] };
        let (y, steps) = integrate(self.scheme, self.control, &mut sys, t0, y0, t_end)?;
        let System { state, log, dts, .. } = sys;
        state.set_flat_params(&y)?;
        state.sample()?;
        let (energy, _) = state.expect_and_force(self.hamiltonian.as_ref())?;
        let extra = measure(state, observables)?;
        write_entry(log, t_end, &energy, &extra, state.acceptance())?;
        Ok(TdvpReport { steps, dts })
    }
}

type Entry = (Stats, Vec<(String, Stats)>, Option<f64>);

struct System<'a, 'b> {
    tdvp: &'a Tdvp,
    state: &'a mut VariationalState,
    observables: &'a [(&'b str, &'b dyn Observable)],
    log: &'a mut RunLog,
    callback: &'a mut dyn FnMut(f64, &VariationalState) -> Result<()>,
    pending: Option<Entry>,
    metric: Option<QgtJacobian>,
    dts: Vec<f64>,
}

fn measure(state: &mut VariationalState, observables: &[(&str, &dyn Observable)]) -> Result<Vec<(String, Stats)>> {
    observables.iter().map(|(n, op)| Ok((n.to_string(), state.expect(*op)?))).collect()
}

fn write_entry(log: &mut RunLog, t: f64, energy: &Stats, extra: &[(String, Stats)], acceptance: Option<f64>) -> Result<()> {
    log.begin(t);
    log.push_stats("Energy", energy)?;
    for (n, s) in extra {
        log.push_stats(n, s)?;
    }
    if let Some(a) = acceptance {
        log.push_scalar("acceptance", a)?;
    }
    Ok(())
}

impl OdeSystem for System<'_, '_> {
    fn rhs(&mut self, stage: usize, _t: f64, y: &[C64]) -> Result<Vec<C64>> {
        self.state.set_flat_params(y)?;
        self.state.sample()?;
        let (energy, d) = self.tdvp.time_derivative(self.state)?;
        if stage == 0 {
            let extra = measure(self.state, self.observables)?;
            self.pending = Some((energy, extra, self.state.acceptance()));
            if self.tdvp.norm == ErrorNorm::Qgt {
                let coords = self.state.coords();
                let chunk = self.state.chunk_size();
                let draw = self.state.samples()?.clone();
                let bound = self.state.bound()?;
                self.metric = Some(QgtJacobian::new(&*bound, &draw.configs, Some(&draw.weights), coords, 0.0, chunk)?);
            }
        }
        Ok(d)
    }

    fn norm(&mut self, v: &[C64]) -> Result<f64> {
        match (&self.tdvp.norm, &self.metric) {
            (ErrorNorm::Qgt, Some(g)) => {
                let gv = g.matvec(v)?;
                let q: f64 = v.iter().zip(&gv).map(|(a, b)| (a.conj() * b).re).sum();
                Ok(q.max(0.0).sqrt())
            }
            (ErrorNorm::Qgt, None) => Err(Error::InvalidArgument("QGT norm requested before the first stage".into())),
            _ => Ok(euclidean_norm(v)),
        }
    }

    fn accepted(&mut self, t: f64, dt: f64, y_new: &[C64]) -> Result<()> {
        let (energy, extra, acc) = self.pending.take().expect("stage 0 precedes acceptance");
        write_entry(self.log, t, &energy, &extra, acc)?;
        self.dts.push(dt);
        self.state.set_flat_params(y_new)?;
        (self.callback)(t + dt, self.state)
    }
}
