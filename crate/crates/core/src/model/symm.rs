//! Symmetric ansätze built from group convolutions.
//!
//! Features are indexed by group elements. The embedding
//! `f_g = Σ_r W_{g⁻¹r} s_r` and the group convolution
//! `φ_g = Σ_h W_{h⁻¹g} f_h` both satisfy `f(u·s)_g = f(s)_{u⁻¹g}` under the
//! site action `(u·s)_{u(r)} = s_r`.

use std::sync::Arc;

use super::params::{DType, LeafSpec, ParamTree};
use super::{ln_cosh, BoundModel, Model};
use crate::error::{Error, Result};
use crate::symmetry::PermutationGroup;
use crate::C64;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// Group-valued embedding: `out[c·|G| + g] = b_c + Σ_r W[c, g⁻¹(r)] s_r`.
pub fn dense_symm_embed(
    kernel: &[C64],
    bias: Option<&[C64]>,
    group: &PermutationGroup,
    s: &[f64],
) -> Result<Vec<C64>> {
    let n = group.n_sites();
    if s.len() != n || kernel.len() % n != 0 {
        return Err(Error::ShapeMismatch(format!(
            "embedding over {n} sites got input {} and kernel {}",
            s.len(),
            kernel.len()
        )));
    }
    let f = kernel.len() / n;
    let order = group.order();
    let mut out = vec![zero(); f * order];
    for c in 0..f {
        let w = &kernel[c * n..(c + 1) * n];
        let b = bias.map_or(zero(), |b| b[c]);
        for (g, perm) in group.elements().iter().enumerate() {
            // Σ_r W[g⁻¹ r] s_r = Σ_{r'} W[r'] s_{g(r')}
            let mut acc = b;
            for (rp, &wr) in w.iter().enumerate() {
                acc += wr * s[perm.apply_index(rp)];
            }
            out[c * order + g] = acc;
        }
    }
    Ok(out)
}

/// Group convolution in expanded-kernel form:
/// `out[c'·|G| + g] = b_{c'} + Σ_c Σ_h W[c, c', h⁻¹g] f[c·|G| + h]`.
pub fn dense_equivariant(
    kernel: &[C64],
    bias: Option<&[C64]>,
    group: &PermutationGroup,
    f: &[C64],
    f_in: usize,
    f_out: usize,
) -> Result<Vec<C64>> {
    let order = group.order();
    if kernel.len() != f_in * f_out * order || f.len() != f_in * order {
        return Err(Error::ShapeMismatch("group convolution kernel or input has the wrong size".into()));
    }
    let mut out = vec![zero(); f_out * order];
    let mut expanded = vec![zero(); order * order];
    for co in 0..f_out {
        for ci in 0..f_in {
            let w = &kernel[(ci * f_out + co) * order..(ci * f_out + co + 1) * order];
            for g in 0..order {
                for h in 0..order {
                    expanded[g * order + h] = w[group.product(group.inverse(h), g)];
                }
            }
            for g in 0..order {
                let row = &expanded[g * order..(g + 1) * order];
                out[co * order + g] += row.iter().zip(&f[ci * order..(ci + 1) * order]).map(|(a, b)| a * b).sum::<C64>();
            }
        }
        if let Some(b) = bias {
            for g in 0..order {
                out[co * order + g] += b[co];
            }
        }
    }
    Ok(out)
}

/// Symmetric RBM: `lnψ = a Σ_i s_i + Σ_{c,g} ln cosh(f_g^{(c)})`, invariant
/// under every group element.
#[derive(Clone, Debug)]
pub struct RbmSymm {
    group: Arc<PermutationGroup>,
    features: usize,
    dtype: DType,
}

impl RbmSymm {
    pub fn new(group: Arc<PermutationGroup>, features: usize, dtype: DType) -> Self {
        RbmSymm { group, features, dtype }
    }

    /// `max(1, round(α N / |G|))` features.
    pub fn from_alpha(group: Arc<PermutationGroup>, alpha: f64, dtype: DType) -> Self {
        let f = (alpha * group.n_sites() as f64 / group.order() as f64).round().max(1.0) as usize;
        Self::new(group, f, dtype)
    }
}

impl Model for RbmSymm {
    fn name(&self) -> &'static str {
        "RBMSymm"
    }

    fn input_size(&self) -> usize {
        self.group.n_sites()
    }

    fn layout(&self) -> Vec<LeafSpec> {
        vec![
            LeafSpec::new("hidden_bias", &[self.features], self.dtype),
            LeafSpec::new("kernel", &[self.features, self.group.n_sites()], self.dtype),
            LeafSpec::new("visible_bias", &[1], self.dtype),
        ]
    }

    fn is_holomorphic(&self) -> bool {
        self.dtype == DType::C64
    }

    fn bind<'a>(&'a self, params: &'a ParamTree) -> Result<Box<dyn BoundModel + 'a>> {
        let n = self.group.n_sites();
        let w = params.get("kernel")?;
        if w.len() != self.features * n {
            return Err(Error::ShapeMismatch("RBMSymm kernel has the wrong size".into()));
        }
        Ok(Box::new(BoundRbmSymm {
            model: self,
            a: params.get("visible_bias")?[0],
            b: params.get("hidden_bias")?,
            w,
            offsets: [params.offset("visible_bias")?, params.offset("hidden_bias")?, params.offset("kernel")?],
            n_params: params.n_params(),
        }))
    }
}

struct BoundRbmSymm<'a> {
    model: &'a RbmSymm,
    a: C64,
    b: &'a [C64],
    w: &'a [C64],
    offsets: [usize; 3],
    n_params: usize,
}

impl BoundModel for BoundRbmSymm<'_> {
    fn n_params(&self) -> usize {
        self.n_params
    }

    fn log_psi(&self, s: &[f64]) -> C64 {
        let z = dense_symm_embed(self.w, Some(self.b), &self.model.group, s).unwrap();
        let visible = self.a * s.iter().sum::<f64>();
        visible + z.iter().map(|&x| ln_cosh(x)).sum::<C64>()
    }

    fn log_grad(&self, s: &[f64], out: &mut [C64]) {
        let g = &self.model.group;
        let (n, order) = (g.n_sites(), g.order());
        let z = dense_symm_embed(self.w, Some(self.b), g, s).unwrap();
        let [oa, ob, ow] = self.offsets;
        out[oa] = C64::new(s.iter().sum(), 0.0);
        for c in 0..self.model.features {
            let mut db = zero();
            let mut dw = vec![zero(); n];
            for (gi, perm) in g.elements().iter().enumerate() {
                let t = z[c * order + gi].tanh();
                db += t;
                for (rp, d) in dw.iter_mut().enumerate() {
                    *d += t * s[perm.apply_index(rp)];
                }
            }
            out[ob + c] = db;
            out[ow + c * n..ow + (c + 1) * n].copy_from_slice(&dw);
        }
    }
}

/// Group-convolutional network projected onto one symmetry sector:
/// `ψ(s) = Σ_{c,g} χ_g exp(f_g^{(c)}(s))` with `ln cosh` between layers.
/// For one-dimensional characters this gives `ψ(g·s) = χ_g ψ(s)`.
#[derive(Clone, Debug)]
pub struct Gcnn {
    group: Arc<PermutationGroup>,
    features: Vec<usize>,
    characters: Vec<C64>,
    dtype: DType,
}

impl Gcnn {
    /// `features[l]` is the width of layer `l`; the first layer is the
    /// embedding. `characters` has one entry per group element.
    pub fn new(group: Arc<PermutationGroup>, features: Vec<usize>, characters: Vec<C64>, dtype: DType) -> Result<Self> {
        if features.is_empty() || features.contains(&0) {
            return Err(Error::InvalidArgument("GCNN needs at least one layer of nonzero width".into()));
        }
        if characters.len() != group.order() {
            return Err(Error::ShapeMismatch(format!(
                "{} characters for a group of order {}",
                characters.len(),
                group.order()
            )));
        }
        Ok(Gcnn { group, features, characters, dtype })
    }

    /// The fully symmetric sector.
    pub fn invariant(group: Arc<PermutationGroup>, features: Vec<usize>, dtype: DType) -> Result<Self> {
        let chi = vec![C64::new(1.0, 0.0); group.order()];
        Self::new(group, features, chi, dtype)
    }

    fn kernel_path(l: usize) -> String {
        format!("layer{l}/kernel")
    }

    fn bias_path(l: usize) -> String {
        format!("layer{l}/bias")
    }
}

impl Model for Gcnn {
    fn name(&self) -> &'static str {
        "GCNN"
    }

    fn input_size(&self) -> usize {
        self.group.n_sites()
    }

    fn layout(&self) -> Vec<LeafSpec> {
        let order = self.group.order();
        let mut out = Vec::new();
        for (l, &f) in self.features.iter().enumerate() {
            out.push(LeafSpec::new(&Self::bias_path(l), &[f], self.dtype));
            let shape = if l == 0 { vec![f, self.group.n_sites()] } else { vec![self.features[l - 1], f, order] };
            out.push(LeafSpec::new(&Self::kernel_path(l), &shape, self.dtype));
        }
        out
    }

    fn is_holomorphic(&self) -> bool {
        self.dtype == DType::C64
    }

    fn bind<'a>(&'a self, params: &'a ParamTree) -> Result<Box<dyn BoundModel + 'a>> {
        let mut layers = Vec::with_capacity(self.features.len());
        for l in 0..self.features.len() {
            let (kp, bp) = (Self::kernel_path(l), Self::bias_path(l));
            layers.push(LayerParams {
                w: params.get(&kp)?,
                b: params.get(&bp)?,
                w_off: params.offset(&kp)?,
                b_off: params.offset(&bp)?,
            });
        }
        Ok(Box::new(BoundGcnn { model: self, layers, n_params: params.n_params() }))
    }
}

struct LayerParams<'a> {
    w: &'a [C64],
    b: &'a [C64],
    w_off: usize,
    b_off: usize,
}

struct BoundGcnn<'a> {
    model: &'a Gcnn,
    layers: Vec<LayerParams<'a>>,
    n_params: usize,
}

impl BoundGcnn<'_> {
    // pre-activations of every layer
    fn forward(&self, s: &[f64]) -> Vec<Vec<C64>> {
        let g = &self.model.group;
        let feats = &self.model.features;
        let mut zs = Vec::with_capacity(feats.len());
        zs.push(dense_symm_embed(self.layers[0].w, Some(self.layers[0].b), g, s).unwrap());
        for l in 1..feats.len() {
            let a: Vec<C64> = zs[l - 1].iter().map(|&z| ln_cosh(z)).collect();
            let lp = &self.layers[l];
            zs.push(dense_equivariant(lp.w, Some(lp.b), g, &a, feats[l - 1], feats[l]).unwrap());
        }
        zs
    }

    // ln Σ_{c,g} χ_g e^{z_{c,g}} and the weights ∂/∂z
    fn project(&self, z: &[C64]) -> (C64, Vec<C64>) {
        let order = self.model.group.order();
        let m = z.iter().map(|v| v.re).fold(f64::NEG_INFINITY, f64::max);
        let terms: Vec<C64> = z
            .iter()
            .enumerate()
            .map(|(i, &v)| self.model.characters[i % order] * (v - m).exp())
            .collect();
        let sum: C64 = terms.iter().sum();
        if sum.norm() == 0.0 {
            return (C64::new(f64::NEG_INFINITY, 0.0), vec![zero(); z.len()]);
        }
        (sum.ln() + m, terms.iter().map(|t| t / sum).collect())
    }
}

impl BoundModel for BoundGcnn<'_> {
    fn n_params(&self) -> usize {
        self.n_params
    }

    fn log_psi(&self, s: &[f64]) -> C64 {
        let zs = self.forward(s);
        self.project(zs.last().unwrap()).0
    }

    fn log_grad(&self, s: &[f64], out: &mut [C64]) {
        let g = &self.model.group;
        let order = g.order();
        let feats = &self.model.features;
        let zs = self.forward(s);
        out.iter_mut().for_each(|v| *v = zero());
        let (_, mut delta) = self.project(zs.last().unwrap());
        for l in (1..feats.len()).rev() {
            let (fi, fo) = (feats[l - 1], feats[l]);
            let lp = &self.layers[l];
            let a: Vec<C64> = zs[l - 1].iter().map(|&z| ln_cosh(z)).collect();
            let mut da = vec![zero(); fi * order];
            for co in 0..fo {
                out[lp.b_off + co] = delta[co * order..(co + 1) * order].iter().sum();
            }
            for ci in 0..fi {
                for co in 0..fo {
                    let base = (ci * fo + co) * order;
                    for h in 0..order {
                        let ah = a[ci * order + h];
                        let mut acc_a = zero();
                        for k in 0..order {
                            let d = delta[co * order + g.product(h, k)];
                            out[lp.w_off + base + k] += d * ah;
                            acc_a += lp.w[base + k] * d;
                        }
                        da[ci * order + h] += acc_a;
                    }
                }
            }
            delta = da.iter().zip(&zs[l - 1]).map(|(d, z)| d * z.tanh()).collect();
        }
        let lp = &self.layers[0];
        let n = g.n_sites();
        for c in 0..feats[0] {
            out[lp.b_off + c] = delta[c * order..(c + 1) * order].iter().sum();
            for rp in 0..n {
                out[lp.w_off + c * n + rp] = g
                    .elements()
                    .iter()
                    .enumerate()
                    .map(|(gi, p)| delta[c * order + gi] * s[p.apply_index(rp)])
                    .sum();
            }
        }
    }
}
