//! Two-body Jastrow ansatz `lnψ(s) = sᵀ W s`.

use super::params::{DType, LeafSpec, ParamTree};
use super::{BoundModel, Model};
use crate::error::{Error, Result};
use crate::rng::RngKey;
use crate::C64;

#[derive(Clone, Debug)]
pub struct Jastrow {
    n: usize,
    dtype: DType,
}

impl Jastrow {
    pub fn new(n: usize, dtype: DType) -> Self {
        Jastrow { n, dtype }
    }
}

impl Model for Jastrow {
    fn name(&self) -> &'static str {
        "Jastrow"
    }

    fn input_size(&self) -> usize {
        self.n
    }

    fn layout(&self) -> Vec<LeafSpec> {
        vec![LeafSpec::new("kernel", &[self.n, self.n], self.dtype)]
    }

    fn is_holomorphic(&self) -> bool {
        self.dtype == DType::C64
    }

    /// Truncated normal, then symmetrized.
    fn init_params(&self, key: RngKey) -> Result<ParamTree> {
        let mut p = ParamTree::truncated_normal(self.layout(), key, super::INIT_SIGMA)?;
        let n = self.n;
        let w = p.get_mut("kernel")?;
        for i in 0..n {
            for j in i + 1..n {
                let m = (w[i * n + j] + w[j * n + i]) * 0.5;
                w[i * n + j] = m;
                w[j * n + i] = m;
            }
        }
        Ok(p)
    }

    fn bind<'a>(&'a self, params: &'a ParamTree) -> Result<Box<dyn BoundModel + 'a>> {
        let w = params.get("kernel")?;
        if w.len() != self.n * self.n {
            return Err(Error::ShapeMismatch("Jastrow kernel must be N×N".into()));
        }
        Ok(Box::new(BoundJastrow { n: self.n, w }))
    }
}

struct BoundJastrow<'a> {
    n: usize,
    w: &'a [C64],
}

impl BoundModel for BoundJastrow<'_> {
    fn n_params(&self) -> usize {
        self.n * self.n
    }

    fn log_psi(&self, s: &[f64]) -> C64 {
        let n = self.n;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += self.w[i * n + j] * (s[i] * s[j]);
            }
        }
        acc
    }

    fn log_grad(&self, s: &[f64], out: &mut [C64]) {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = C64::new(s[i] * s[j], 0.0);
            }
        }
    }
}
