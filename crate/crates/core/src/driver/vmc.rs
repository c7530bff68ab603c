//! Ground-state optimization: SGD with optional stochastic reconfiguration.

use std::sync::Arc;

use super::state::VariationalState;
use super::stats::{RunLog, Stats};
use crate::error::{Error, Result};
use crate::operator::Observable;
use crate::qgt::{Qgt, QgtJacobian, QgtOnTheFly, SolveInfo, Solver};
use crate::C64;

/// `θ ← θ − η δ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sgd {
    pub learning_rate: f64,
}

impl Sgd {
    pub fn new(learning_rate: f64) -> Result<Self> {
        if !(learning_rate >= 0.0) || !learning_rate.is_finite() {
            return Err(Error::InvalidArgument(format!("learning rate must be non-negative, got {learning_rate}")));
        }
        Ok(Sgd { learning_rate })
    }

    pub fn update(&self, state: &mut VariationalState, delta: &[C64]) -> Result<()> {
        let mut p = state.params().clone();
        p.add_scaled(delta, C64::new(-self.learning_rate, 0.0))?;
        if !p.is_finite() {
            return Err(Error::NonFinite("parameters after update".into()));
        }
        state.set_params(p)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum QgtKind {
    #[default]
    Jacobian,
    OnTheFly,
}

/// Stochastic reconfiguration: solve `(G + εI) δ = f` on the current draw.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sr {
    pub diag_shift: f64,
    pub solver: Solver,
    pub qgt: QgtKind,
}

impl Default for Sr {
    fn default() -> Self {
        Sr { diag_shift: 0.01, solver: Solver::default(), qgt: QgtKind::Jacobian }
    }
}

impl Sr {
    pub fn new(diag_shift: f64) -> Self {
        Sr { diag_shift, ..Sr::default() }
    }

    pub fn with_solver(mut self, solver: Solver) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_qgt(mut self, qgt: QgtKind) -> Self {
        self.qgt = qgt;
        self
    }

    /// Solves against the QGT built on the state's current samples.
    pub fn solve(&self, state: &mut VariationalState, rhs: &[C64]) -> Result<(Vec<C64>, SolveInfo)> {
        let coords = state.coords();
        let chunk = state.chunk_size();
        let draw = state.samples()?.clone();
        let bound = state.bound()?;
        match self.qgt {
            QgtKind::Jacobian => {
                let q = QgtJacobian::new(&*bound, &draw.configs, Some(&draw.weights), coords, self.diag_shift, chunk)?;
                q.solve(self.solver, rhs)
            }
            QgtKind::OnTheFly => {
                let q = QgtOnTheFly::new(&*bound, &draw.configs, Some(&draw.weights), coords, self.diag_shift)?;
                q.solve(self.solver, rhs)
            }
        }
    }
}

/// Variational Monte Carlo driver.
pub struct Vmc {
    hamiltonian: Arc<dyn Observable>,
    optimizer: Sgd,
    preconditioner: Option<Sr>,
}

/// Outcome of one optimization step.
#[derive(Clone, Debug)]
pub struct StepReport {
    pub energy: Stats,
    pub acceptance: Option<f64>,
    pub solve: Option<SolveInfo>,
}

impl Vmc {
    pub fn new(hamiltonian: Arc<dyn Observable>, optimizer: Sgd, preconditioner: Option<Sr>) -> Self {
        Vmc { hamiltonian, optimizer, preconditioner }
    }

    /// Sample, estimate energy and gradient, precondition, update.
    pub fn step(&self, state: &mut VariationalState) -> Result<StepReport> {
        state.sample()?;
        self.step_on_current(state)
    }

    /// Runs `n_iter` steps, logging the energy of each step's samples
    /// (before its update) and any extra observables. `callback` runs after
    /// every step.
    pub fn run(
        &self,
        state: &mut VariationalState,
        n_iter: usize,
        observables: &[(&str, &dyn Observable)],
        log: &mut RunLog,
        mut callback: impl FnMut(usize, &VariationalState) -> Result<()>,
    ) -> Result<()> {
        if n_iter == 0 {
            return Err(Error::InvalidArgument("n_iter must be at least 1".into()));
        }
        for it in 0..n_iter {
            state.sample()?;
            let mut extra = Vec::with_capacity(observables.len());
            for (name, op) in observables {
                extra.push((*name, state.expect(*op)?));
            }
            let report = self.step_on_current(state)?;
            log.begin(it as f64);
            log.push_stats("Energy", &report.energy)?;
            for (name, s) in &extra {
                log.push_stats(name, s)?;
            }
            if let Some(a) = report.acceptance {
                log.push_scalar("acceptance", a)?;
            }
            callback(it, state)?;
        }
        Ok(())
    }

    // step without drawing new samples
    fn step_on_current(&self, state: &mut VariationalState) -> Result<StepReport> {
        let acceptance = state.acceptance();
        let (energy, grad) = state.expect_and_grad(self.hamiltonian.as_ref())?;
        if !energy.is_finite() || grad.iter().any(|g| !g.re.is_finite() || !g.im.is_finite()) {
            return Err(Error::NonFinite("energy or gradient".into()));
        }
        let (delta, solve) = match &self.preconditioner {
            Some(sr) => {
                let (d, info) = sr.solve(state, &grad)?;
                (d, Some(info))
            }
            None => (grad, None),
        };
        self.optimizer.update(state, &delta)?;
        Ok(StepReport { energy, acceptance, solve })
    }
}
