//! Variational Monte Carlo for neural quantum states.
//!
//! The crate is organised bottom-up:
//!
//! - [`hilbert`]: computational bases for discrete and continuous systems
//! - [`lattice`]: graphs and periodic lattices
//! - [`symmetry`]: permutation/point groups, character tables, space groups
//! - [`operator`]: sparse-by-rows operators and local estimators
//! - [`model`]: variational ansätze with analytic log-derivatives
//! - [`sampler`]: Metropolis–Hastings chains, exact and full-summation sampling
//! - [`qgt`]: matrix-free quantum geometric tensor and linear solvers
//! - [`driver`]: variational state, VMC and TDVP drivers, integrators
//! - [`oracle`]: exact diagonalization and exact propagation references

pub mod batch;
pub mod driver;
pub mod error;
pub mod hilbert;
pub mod lattice;
pub mod model;
pub mod operator;
pub mod oracle;
pub mod qgt;
pub mod rng;
pub mod sampler;
pub mod symmetry;

pub use batch::Batch;
pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
pub use rng::RngKey;
