//! Restricted Boltzmann machine `lnψ(s) = a·s + Σ_j ln cosh((W s)_j + b_j)`.

use super::params::{DType, LeafSpec, ParamTree};
use super::{ln_cosh, BoundModel, Model};
use crate::error::{Error, Result};
use crate::C64;

#[derive(Clone, Debug)]
pub struct Rbm {
    n: usize,
    n_hidden: usize,
    dtype: DType,
    visible_bias: bool,
    hidden_bias: bool,
}

impl Rbm {
    /// `alpha · n` hidden units.
    pub fn new(n: usize, alpha: f64, dtype: DType) -> Self {
        Self::with_hidden(n, (alpha * n as f64).round() as usize, dtype)
    }

    pub fn with_hidden(n: usize, n_hidden: usize, dtype: DType) -> Self {
        Rbm { n, n_hidden, dtype, visible_bias: true, hidden_bias: true }
    }

    pub fn visible_bias(mut self, on: bool) -> Self {
        self.visible_bias = on;
        self
    }

    pub fn hidden_bias(mut self, on: bool) -> Self {
        self.hidden_bias = on;
        self
    }

    pub fn n_hidden(&self) -> usize {
        self.n_hidden
    }
}

impl Model for Rbm {
    fn name(&self) -> &'static str {
        "RBM"
    }

    fn input_size(&self) -> usize {
        self.n
    }

    fn layout(&self) -> Vec<LeafSpec> {
        let mut l = Vec::new();
        if self.n_hidden > 0 {
            if self.hidden_bias {
                l.push(LeafSpec::new("hidden_bias", &[self.n_hidden], self.dtype));
            }
            l.push(LeafSpec::new("kernel", &[self.n_hidden, self.n], self.dtype));
        }
        if self.visible_bias {
            l.push(LeafSpec::new("visible_bias", &[self.n], self.dtype));
        }
        l
    }

    fn is_holomorphic(&self) -> bool {
        self.dtype == DType::C64
    }

    fn bind<'a>(&'a self, params: &'a ParamTree) -> Result<Box<dyn BoundModel + 'a>> {
        let get = |path: &str, on: bool, len: usize| -> Result<Option<(&'a [C64], usize)>> {
            if !on {
                return Ok(None);
            }
            let v = params.get(path)?;
            if v.len() != len {
                return Err(Error::ShapeMismatch(format!("RBM leaf '{path}' has wrong size")));
            }
            Ok(Some((v, params.offset(path)?)))
        };
        let has_hidden = self.n_hidden > 0;
        Ok(Box::new(BoundRbm {
            n: self.n,
            m: self.n_hidden,
            a: get("visible_bias", self.visible_bias, self.n)?,
            b: get("hidden_bias", has_hidden && self.hidden_bias, self.n_hidden)?,
            w: get("kernel", has_hidden, self.n_hidden * self.n)?,
            n_params: params.n_params(),
        }))
    }
}

struct BoundRbm<'a> {
    n: usize,
    m: usize,
    a: Option<(&'a [C64], usize)>,
    b: Option<(&'a [C64], usize)>,
    w: Option<(&'a [C64], usize)>,
    n_params: usize,
}

impl BoundRbm<'_> {
    fn theta(&self, s: &[f64], j: usize) -> C64 {
        let w = self.w.unwrap().0;
        let mut t = self.b.map_or(C64::new(0.0, 0.0), |(b, _)| b[j]);
        for (k, &sk) in s.iter().enumerate() {
            t += w[j * self.n + k] * sk;
        }
        t
    }
}

impl BoundModel for BoundRbm<'_> {
    fn n_params(&self) -> usize {
        self.n_params
    }

    fn log_psi(&self, s: &[f64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        if let Some((a, _)) = self.a {
            for (ai, si) in a.iter().zip(s) {
                acc += ai * si;
            }
        }
        for j in 0..self.m {
            acc += ln_cosh(self.theta(s, j));
        }
        acc
    }

    fn log_grad(&self, s: &[f64], out: &mut [C64]) {
        if let Some((_, off)) = self.a {
            for (o, &si) in out[off..off + self.n].iter_mut().zip(s) {
                *o = C64::new(si, 0.0);
            }
        }
        for j in 0..self.m {
            let t = self.theta(s, j).tanh();
            if let Some((_, off)) = self.b {
                out[off + j] = t;
            }
            let off = self.w.unwrap().1 + j * self.n;
            for (k, &sk) in s.iter().enumerate() {
                out[off + k] = t * sk;
            }
        }
    }

    // forward mode: d lnψ = a'·s + Σ_j tanh θ_j (W' s + b')_j
    fn jvp(&self, s: &[f64], v: &[C64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        if let Some((_, off)) = self.a {
            for (vi, si) in v[off..off + self.n].iter().zip(s) {
                acc += vi * si;
            }
        }
        for j in 0..self.m {
            let mut dtheta = self.b.map_or(C64::new(0.0, 0.0), |(_, off)| v[off + j]);
            let off = self.w.unwrap().1 + j * self.n;
            for (k, &sk) in s.iter().enumerate() {
                dtheta += v[off + k] * sk;
            }
            acc += self.theta(s, j).tanh() * dtheta;
        }
        acc
    }

    fn vjp(&self, s: &[f64], c: C64, out: &mut [C64]) {
        if let Some((_, off)) = self.a {
            for (o, &si) in out[off..off + self.n].iter_mut().zip(s) {
                *o += c * si;
            }
        }
        for j in 0..self.m {
            let ct = c * self.theta(s, j).tanh();
            if let Some((_, off)) = self.b {
                out[off + j] += ct;
            }
            let off = self.w.unwrap().1 + j * self.n;
            for (k, &sk) in s.iter().enumerate() {
                out[off + k] += ct * sk;
            }
        }
    }
}
