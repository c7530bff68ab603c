//! Variational ansätze.
//!
//! A [`Model`] describes the parameter layout and binds to a [`ParamTree`]
//! to produce a [`BoundModel`], which evaluates `lnψ(s)` and its analytic
//! log-derivatives `O_k(s) = ∂lnψ(s)/∂θ_k` one configuration at a time.
//! Batched helpers evaluate many configurations in parallel; chunking only
//! bounds how many are in flight and never changes results.

mod gaussian;
mod jastrow;
mod params;
mod rbm;
mod symm;

use rayon::prelude::*;

use crate::batch::Batch;
use crate::error::Result;
use crate::rng::RngKey;
use crate::C64;

pub use gaussian::Gaussian;
pub use jastrow::Jastrow;
pub use params::{truncated_normal, DType, LeafSpec, ParamTree};
pub use rbm::Rbm;
pub use symm::{dense_equivariant, dense_symm_embed, Gcnn, RbmSymm};

/// Standard deviation of the default truncated-normal initialization.
pub const INIT_SIGMA: f64 = 0.01;

pub trait Model: Send + Sync {
    fn name(&self) -> &'static str;

    /// Number of entries of one input configuration.
    fn input_size(&self) -> usize;

    fn layout(&self) -> Vec<LeafSpec>;

    /// Complex parameters with `lnψ` holomorphic in them.
    fn is_holomorphic(&self) -> bool;

    fn init_params(&self, key: RngKey) -> Result<ParamTree> {
        ParamTree::truncated_normal(self.layout(), key, INIT_SIGMA)
    }

    fn bind<'a>(&'a self, params: &'a ParamTree) -> Result<Box<dyn BoundModel + 'a>>;
}

pub trait BoundModel: Send + Sync {
    fn n_params(&self) -> usize;

    fn log_psi(&self, s: &[f64]) -> C64;

    /// Writes `O_k(s)` for every flat parameter `k`.
    fn log_grad(&self, s: &[f64], out: &mut [C64]);

    /// `Σ_k O_k(s) v_k`.
    fn jvp(&self, s: &[f64], v: &[C64]) -> C64 {
        let mut o = vec![C64::new(0.0, 0.0); self.n_params()];
        self.log_grad(s, &mut o);
        o.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    /// `out_k += c · O_k(s)`.
    fn vjp(&self, s: &[f64], c: C64, out: &mut [C64]) {
        let mut o = vec![C64::new(0.0, 0.0); self.n_params()];
        self.log_grad(s, &mut o);
        for (acc, v) in out.iter_mut().zip(&o) {
            *acc += c * v;
        }
    }

    /// Spatial gradient and Hessian diagonal of `lnψ` for continuous models.
    fn spatial_derivatives(&self, _x: &[f64]) -> Option<(Vec<C64>, Vec<C64>)> {
        None
    }
}

/// Applies `f` to consecutive row blocks of at most `chunk` rows and
/// concatenates the results.
pub fn chunked_apply<T, F>(batch: &Batch, chunk: Option<usize>, f: F) -> Vec<T>
where
    F: Fn(&Batch) -> Vec<T>,
{
    let n = batch.len();
    let size = chunk.unwrap_or(n).max(1);
    if size >= n {
        return f(batch);
    }
    let mut out = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let end = (start + size).min(n);
        out.extend(f(&batch.slice(start, end)));
        start = end;
    }
    out
}

pub fn log_psi_batch(m: &dyn BoundModel, batch: &Batch, chunk: Option<usize>) -> Vec<C64> {
    chunked_apply(batch, chunk, |b| {
        (0..b.len()).into_par_iter().map(|i| m.log_psi(b.row(i))).collect()
    })
}

/// Row-major `n_samples × n_params` Jacobian of `lnψ`.
pub fn jacobian(m: &dyn BoundModel, batch: &Batch, chunk: Option<usize>) -> Vec<C64> {
    let np = m.n_params();
    let rows: Vec<Vec<C64>> = chunked_apply(batch, chunk, |b| {
        (0..b.len())
            .into_par_iter()
            .map(|i| {
                let mut o = vec![C64::new(0.0, 0.0); np];
                m.log_grad(b.row(i), &mut o);
                o
            })
            .collect()
    });
    rows.concat()
}

/// `Σ_i c_i O(s_i)` over the rows of `batch`. Rows are summed in fixed
/// blocks combined in order, so the result does not depend on scheduling.
pub fn vjp_sum(m: &dyn BoundModel, batch: &Batch, coeffs: &[C64]) -> Vec<C64> {
    const BLOCK: usize = 64;
    let np = m.n_params();
    let zero = C64::new(0.0, 0.0);
    let partial: Vec<Vec<C64>> = (0..batch.len().div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut acc = vec![zero; np];
            for i in b * BLOCK..((b + 1) * BLOCK).min(batch.len()) {
                if coeffs[i] != zero {
                    m.vjp(batch.row(i), coeffs[i], &mut acc);
                }
            }
            acc
        })
        .collect();
    let mut out = vec![zero; np];
    for p in &partial {
        for (o, v) in out.iter_mut().zip(p) {
            *o += v;
        }
    }
    out
}

/// `ln cosh z`, stable for large `|Re z|`.
pub fn ln_cosh(z: C64) -> C64 {
    let w = if z.re < 0.0 { -z } else { z };
    w + (C64::new(1.0, 0.0) + (-2.0 * w).exp()).ln() - std::f64::consts::LN_2
}

pub fn ln_cosh_real(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}
