//! Multivariate Gaussian for continuous particles.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

use super::params::{DType, LeafSpec, ParamTree};
use super::{BoundModel, Model};
use crate::error::{Error, Result};
use crate::rng::RngKey;
use crate::C64;

/// Bind refuses kernels with `cond(TTᵀ)` above this.
pub const MAX_CONDITION: f64 = 1e12;

/// `lnψ(x) = −xᵀ Σ⁻¹ x` with `Σ = TTᵀ` and a single `[n, n]` kernel `T`.
#[derive(Clone, Debug)]
pub struct Gaussian {
    n: usize,
    dtype: DType,
}

impl Gaussian {
    pub fn new(n: usize, dtype: DType) -> Self {
        Gaussian { n, dtype }
    }

    /// Parameters with `T = √σ² · I`, i.e. `Σ = σ² I`.
    pub fn isotropic_params(&self, variance: f64) -> Result<ParamTree> {
        let mut p = ParamTree::zeros(self.layout())?;
        let t = p.get_mut("kernel")?;
        for i in 0..self.n {
            t[i * self.n + i] = C64::new(variance.sqrt(), 0.0);
        }
        Ok(p)
    }
}

impl Model for Gaussian {
    fn name(&self) -> &'static str {
        "Gaussian"
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

    /// Kernel entries drawn from a standard normal.
    fn init_params(&self, key: RngKey) -> Result<ParamTree> {
        let mut p = ParamTree::zeros(self.layout())?;
        let mut rng = key.split(0).rng();
        let complex = self.dtype == DType::C64;
        for v in p.get_mut("kernel")? {
            let re: f64 = StandardNormal.sample(&mut rng);
            *v = if complex {
                let im: f64 = StandardNormal.sample(&mut rng);
                C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
            } else {
                C64::new(re, 0.0)
            };
        }
        Ok(p)
    }

    fn bind<'a>(&'a self, params: &'a ParamTree) -> Result<Box<dyn BoundModel + 'a>> {
        let n = self.n;
        let t = DMatrix::from_row_slice(n, n, params.get("kernel")?);
        let sv = t.clone().svd(false, false).singular_values;
        let (hi, lo) = (sv.max(), sv.min());
        if !(lo > 0.0) || (hi / lo).powi(2) > MAX_CONDITION {
            return Err(Error::Factorization(format!(
                "Gaussian covariance is singular or ill-conditioned (singular values of T in [{lo:e}, {hi:e}])"
            )));
        }
        let sigma = &t * t.transpose();
        let p = sigma
            .try_inverse()
            .ok_or_else(|| Error::Factorization("Gaussian covariance is not invertible".into()))?;
        Ok(Box::new(BoundGaussian { p, t, n_params: params.n_params() }))
    }
}

struct BoundGaussian {
    p: DMatrix<C64>,
    t: DMatrix<C64>,
    n_params: usize,
}

impl BoundGaussian {
    fn px(&self, x: &[f64]) -> Vec<C64> {
        let n = x.len();
        (0..n).map(|a| (0..n).map(|b| self.p[(a, b)] * x[b]).sum()).collect()
    }
}

impl BoundModel for BoundGaussian {
    fn n_params(&self) -> usize {
        self.n_params
    }

    fn log_psi(&self, x: &[f64]) -> C64 {
        -self.px(x).iter().zip(x).map(|(y, &xi)| y * xi).sum::<C64>()
    }

    // ∂lnψ/∂T_ab = 2 y_a (Tᵀy)_b with y = Σ⁻¹x
    fn log_grad(&self, x: &[f64], out: &mut [C64]) {
        let n = x.len();
        let y = self.px(x);
        let tty: Vec<C64> = (0..n).map(|b| (0..n).map(|a| self.t[(a, b)] * y[a]).sum()).collect();
        for a in 0..n {
            for b in 0..n {
                out[a * n + b] = 2.0 * y[a] * tty[b];
            }
        }
    }

    fn spatial_derivatives(&self, x: &[f64]) -> Option<(Vec<C64>, Vec<C64>)> {
        let grad = self.px(x).iter().map(|v| -2.0 * v).collect();
        let hess = (0..x.len()).map(|d| -2.0 * self.p[(d, d)]).collect();
        Some((grad, hess))
    }
}
