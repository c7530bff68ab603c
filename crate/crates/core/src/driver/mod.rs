//! Variational states and the optimization and time-evolution drivers.

mod integrator;
mod state;
mod stats;
mod tdvp;
mod vmc;

pub use integrator::{euclidean_norm, integrate, rk_step, step_factor, IntegrationReport, OdeSystem, Scheme, StepControl, Tableau, MAX_STEPS};
pub use state::{Draw, VariationalState};
pub use stats::{RunLog, Stats};
pub use tdvp::{ErrorNorm, Propagation, Tdvp, TdvpReport};
pub use vmc::{QgtKind, Sgd, Sr, StepReport, Vmc};
