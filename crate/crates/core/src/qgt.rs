//! Quantum geometric tensor `G_ij = E[ΔO_i* ΔO_j]` as a linear operator.
//!
//! Two implementations share one interface: [`QgtJacobian`] stores the
//! centered, weight-scaled Jacobian; [`QgtOnTheFly`] keeps only the model
//! and samples and applies `G` through directional derivatives and
//! cotangent contractions.
//!
//! Vectors in parameter space are flat `C64` slices in [`ParamTree`] order.
//! Dense matrices and linear solves work in a coordinate space: the flat
//! complex parameters for holomorphic models, or real coordinates (one per
//! real parameter, two per complex parameter) where only `Re G` is used.
//!
//! [`ParamTree`]: crate::model::ParamTree

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::batch::Batch;
use crate::error::{Error, Result};
use crate::model::{jacobian, vjp_sum, BoundModel};
use crate::C64;

/// Largest stored Jacobian, in complex entries.
pub const JACOBIAN_CAP: usize = 1 << 26;

/// Largest coordinate dimension that may be densified.
pub const DENSE_QGT_CAP: usize = 4096;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// How parameter vectors map to solver coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Coords {
    holomorphic: bool,
    real: Vec<bool>,
    dim: usize,
}

impl Coords {
    /// Complex coordinates; every parameter must be complex.
    pub fn holomorphic(n_params: usize) -> Self {
        Coords { holomorphic: true, real: vec![false; n_params], dim: n_params }
    }

    /// Real coordinates from a per-parameter "is real" mask.
    pub fn real(mask: Vec<bool>) -> Self {
        let dim = mask.iter().map(|&r| if r { 1 } else { 2 }).sum();
        Coords { holomorphic: false, real: mask, dim }
    }

    /// Holomorphic coordinates when the model allows them.
    pub fn for_model(model_holomorphic: bool, mask: Vec<bool>) -> Self {
        if model_holomorphic && mask.iter().all(|r| !r) {
            Self::holomorphic(mask.len())
        } else {
            Self::real(mask)
        }
    }

    pub fn is_holomorphic(&self) -> bool {
        self.holomorphic
    }

    pub fn n_params(&self) -> usize {
        self.real.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn to_coords(&self, v: &[C64]) -> Vec<C64> {
        if self.holomorphic {
            return v.to_vec();
        }
        let mut out = Vec::with_capacity(self.dim);
        for (x, &r) in v.iter().zip(&self.real) {
            out.push(C64::new(x.re, 0.0));
            if !r {
                out.push(C64::new(x.im, 0.0));
            }
        }
        out
    }

    pub fn from_coords(&self, x: &[C64]) -> Vec<C64> {
        if self.holomorphic {
            return x.to_vec();
        }
        let mut out = Vec::with_capacity(self.real.len());
        let mut it = x.iter();
        for &r in &self.real {
            let a = it.next().unwrap().re;
            let b = if r { 0.0 } else { it.next().unwrap().re };
            out.push(C64::new(a, b));
        }
        out
    }

    // In real coordinates `G` acts on `δθ = a + ib` as the holomorphic
    // tensor followed by dropping the imaginary part of real parameters.
    fn project(&self, v: &mut [C64]) {
        if !self.holomorphic {
            for (x, &r) in v.iter_mut().zip(&self.real) {
                if r {
                    x.im = 0.0;
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Solver {
    /// Conjugate gradient until `‖Gx − f‖ ≤ tol‖f‖`; `maxiter` defaults to
    /// ten times the coordinate dimension.
    Cg { tol: f64, maxiter: Option<usize> },
    Cholesky,
    /// Pseudo-inverse discarding singular values below `rcond · σ_max`.
    Svd { rcond: f64 },
}

impl Default for Solver {
    fn default() -> Self {
        Solver::Cg { tol: 1e-5, maxiter: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveInfo {
    pub iterations: usize,
    pub residual: f64,
    pub rank: Option<usize>,
}

fn check_shift(eps: f64) -> Result<()> {
    if eps >= 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("diagonal shift must be non-negative, got {eps}")))
    }
}

fn normalized_weights(n: usize, weights: Option<&[f64]>) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    match weights {
        None => Ok(vec![1.0 / n as f64; n]),
        Some(w) if w.len() != n => Err(Error::ShapeMismatch(format!("{} weights for {n} samples", w.len()))),
        Some(w) => {
            let z: f64 = w.iter().sum();
            if !(z > 0.0) || w.iter().any(|&x| x < 0.0) {
                return Err(Error::InvalidArgument("weights must be non-negative with a positive sum".into()));
            }
            Ok(w.iter().map(|x| x / z).collect())
        }
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub trait Qgt: Sync {
    fn coords(&self) -> &Coords;

    fn diag_shift(&self) -> f64;

    /// Adds `eps` to the current diagonal shift.
    fn add_diag_shift(&mut self, eps: f64) -> Result<()>;

    /// `(G + εI) v` on a flat parameter vector, before projection.
    fn apply(&self, v: &[C64]) -> Vec<C64>;

    fn matvec(&self, v: &[C64]) -> Result<Vec<C64>> {
        let c = self.coords();
        if v.len() != c.n_params() {
            return Err(Error::ShapeMismatch(format!("vector of {} for {} parameters", v.len(), c.n_params())));
        }
        let x = c.from_coords(&c.to_coords(v));
        let mut out = self.apply(&x);
        c.project(&mut out);
        Ok(out)
    }

    /// `(G + εI)` in solver coordinates.
    fn to_dense(&self) -> Result<DMatrix<C64>> {
        let c = self.coords();
        let d = c.dim();
        if d > DENSE_QGT_CAP {
            return Err(Error::CapExceeded { what: "QGT dimension", value: d, limit: DENSE_QGT_CAP });
        }
        let cols: Vec<Vec<C64>> = (0..d)
            .into_par_iter()
            .map(|j| {
                let mut e = vec![zero(); d];
                e[j] = C64::new(1.0, 0.0);
                let mut y = self.apply(&c.from_coords(&e));
                c.project(&mut y);
                c.to_coords(&y)
            })
            .collect();
        Ok(DMatrix::from_fn(d, d, |i, j| cols[j][i]))
    }

    /// Solves `(G + εI) δ = f` and returns `δ` as a flat parameter vector.
    fn solve(&self, solver: Solver, f: &[C64]) -> Result<(Vec<C64>, SolveInfo)> {
        let c = self.coords();
        if f.len() != c.n_params() {
            return Err(Error::ShapeMismatch(format!("vector of {} for {} parameters", f.len(), c.n_params())));
        }
        let b = c.to_coords(f);
        let (x, info) = match solver {
            Solver::Cg { tol, maxiter } => {
                if !(tol > 0.0) {
                    return Err(Error::InvalidArgument(format!("CG tolerance must be positive, got {tol}")));
                }
                let op = |x: &[C64]| {
                    let mut y = self.apply(&c.from_coords(x));
                    c.project(&mut y);
                    c.to_coords(&y)
                };
                conjugate_gradient(op, &b, tol, maxiter.unwrap_or(10 * c.dim()))?
            }
            Solver::Cholesky => {
                let m = self.to_dense()?;
                let ch = nalgebra::Cholesky::new(m).ok_or_else(|| Error::Factorization("QGT is not positive definite".into()))?;
                let x = ch.solve(&DVector::from_vec(b));
                (x.as_slice().to_vec(), SolveInfo { iterations: 0, residual: 0.0, rank: Some(c.dim()) })
            }
            Solver::Svd { rcond } => {
                if !(rcond >= 0.0) {
                    return Err(Error::InvalidArgument(format!("rcond must be non-negative, got {rcond}")));
                }
                pinv_solve(self.to_dense()?, &b, rcond)?
            }
        };
        if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("QGT solution".into()));
        }
        Ok((c.from_coords(&x), info))
    }
}

/// Conjugate gradient for a Hermitian positive-definite operator.
pub fn conjugate_gradient<F>(op: F, b: &[C64], tol: f64, maxiter: usize) -> Result<(Vec<C64>, SolveInfo)>
where
    F: Fn(&[C64]) -> Vec<C64>,
{
    let n = b.len();
    let bn = norm(b);
    let mut x = vec![zero(); n];
    if bn == 0.0 {
        return Ok((x, SolveInfo::default()));
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r).re;
    for it in 1..=maxiter.max(1) {
        let ap = op(&p);
        let pap = dot(&p, &ap).re;
        if !(pap > 0.0) {
            return Err(Error::Factorization("operator is not positive definite along a CG direction".into()));
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r).re;
        let res = rr_new.sqrt() / bn;
        if res <= tol {
            return Ok((x, SolveInfo { iterations: it, residual: res, rank: None }));
        }
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    Err(Error::NotConverged { iterations: maxiter, residual: rr.sqrt() / bn })
}

fn pinv_solve(m: DMatrix<C64>, b: &[C64], rcond: f64) -> Result<(Vec<C64>, SolveInfo)> {
    let svd = m.svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(v)) => (u, v),
        _ => return Err(Error::Factorization("SVD did not converge".into())),
    };
    let s = svd.singular_values;
    let cutoff = rcond * s.max();
    let ub = u.adjoint() * DVector::from_column_slice(b);
    let mut y = DVector::zeros(s.len());
    let mut rank = 0;
    for i in 0..s.len() {
        if s[i] > cutoff && s[i] > 0.0 {
            y[i] = ub[i] / s[i];
            rank += 1;
        }
    }
    let x = vt.adjoint() * y;
    Ok((x.as_slice().to_vec(), SolveInfo { iterations: 0, residual: 0.0, rank: Some(rank) }))
}

/// QGT from the stored matrix `ΔJ_{ik} = √p_i (O_ik − Σ_j p_j O_jk)`.
#[derive(Clone, Debug)]
pub struct QgtJacobian {
    dj: DMatrix<C64>,
    coords: Coords,
    shift: f64,
}

impl QgtJacobian {
    /// `weights` default to uniform; otherwise they are normalized.
    pub fn new(
        model: &dyn BoundModel,
        samples: &Batch,
        weights: Option<&[f64]>,
        coords: Coords,
        diag_shift: f64,
        chunk: Option<usize>,
    ) -> Result<Self> {
        check_shift(diag_shift)?;
        let n = samples.len();
        let np = model.n_params();
        if coords.n_params() != np {
            return Err(Error::ShapeMismatch(format!("coordinates for {} parameters, model has {np}", coords.n_params())));
        }
        let w = normalized_weights(n, weights)?;
        if n.saturating_mul(np) > JACOBIAN_CAP {
            return Err(Error::CapExceeded { what: "stored Jacobian entries (use the on-the-fly QGT)", value: n * np, limit: JACOBIAN_CAP });
        }
        let j = jacobian(model, samples, chunk);
        let mut mean = vec![zero(); np];
        for (row, &p) in j.chunks(np.max(1)).zip(&w) {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += p * v;
            }
        }
        let dj = DMatrix::from_fn(n, np, |i, k| (j[i * np + k] - mean[k]) * w[i].sqrt());
        Ok(QgtJacobian { dj, coords, shift: diag_shift })
    }

    /// The centered, scaled Jacobian `ΔJ` (rows are samples).
    pub fn centered_jacobian(&self) -> &DMatrix<C64> {
        &self.dj
    }
}

impl Qgt for QgtJacobian {
    fn coords(&self) -> &Coords {
        &self.coords
    }

    fn diag_shift(&self) -> f64 {
        self.shift
    }

    fn add_diag_shift(&mut self, eps: f64) -> Result<()> {
        check_shift(eps)?;
        self.shift += eps;
        Ok(())
    }

    fn apply(&self, v: &[C64]) -> Vec<C64> {
        let w = &self.dj * DVector::from_column_slice(v);
        let out = self.dj.ad_mul(&w);
        out.iter().zip(v).map(|(o, x)| o + x * self.shift).collect()
    }

    fn to_dense(&self) -> Result<DMatrix<C64>> {
        let c = &self.coords;
        if c.dim() > DENSE_QGT_CAP {
            return Err(Error::CapExceeded { what: "QGT dimension", value: c.dim(), limit: DENSE_QGT_CAP });
        }
        let s = self.dj.ad_mul(&self.dj);
        let mut g = if c.holomorphic {
            s
        } else {
            // coordinate (k, part) has derivative O_k or i O_k
            let mut idx = Vec::with_capacity(c.dim());
            for (k, &r) in c.real.iter().enumerate() {
                idx.push((k, C64::new(1.0, 0.0)));
                if !r {
                    idx.push((k, C64::new(0.0, 1.0)));
                }
            }
            DMatrix::from_fn(c.dim(), c.dim(), |a, b| {
                let (k, ca) = idx[a];
                let (l, cb) = idx[b];
                C64::new((ca.conj() * cb * s[(k, l)]).re, 0.0)
            })
        };
        for i in 0..c.dim() {
            g[(i, i)] += self.shift;
        }
        Ok(g)
    }
}

/// QGT applied lazily: `w = J v`, `Δw = w − E[w]`, `G v = E[O* Δw]`.
pub struct QgtOnTheFly<'a> {
    model: &'a dyn BoundModel,
    samples: &'a Batch,
    weights: Vec<f64>,
    coords: Coords,
    shift: f64,
}

impl<'a> QgtOnTheFly<'a> {
    pub fn new(
        model: &'a dyn BoundModel,
        samples: &'a Batch,
        weights: Option<&[f64]>,
        coords: Coords,
        diag_shift: f64,
    ) -> Result<Self> {
        check_shift(diag_shift)?;
        if coords.n_params() != model.n_params() {
            return Err(Error::ShapeMismatch(format!(
                "coordinates for {} parameters, model has {}",
                coords.n_params(),
                model.n_params()
            )));
        }
        let weights = normalized_weights(samples.len(), weights)?;
        Ok(QgtOnTheFly { model, samples, weights, coords, shift: diag_shift })
    }
}

impl Qgt for QgtOnTheFly<'_> {
    fn coords(&self) -> &Coords {
        &self.coords
    }

    fn diag_shift(&self) -> f64 {
        self.shift
    }

    fn add_diag_shift(&mut self, eps: f64) -> Result<()> {
        check_shift(eps)?;
        self.shift += eps;
        Ok(())
    }

    fn apply(&self, v: &[C64]) -> Vec<C64> {
        let n = self.samples.len();
        let w: Vec<C64> = (0..n).into_par_iter().map(|i| self.model.jvp(self.samples.row(i), v)).collect();
        let mean: C64 = w.iter().zip(&self.weights).map(|(x, p)| x * p).sum();
        // Σ_i p_i O_i conj(Δw_i), conjugated at the end
        let coeffs: Vec<C64> = (0..n).map(|i| (w[i] - mean).conj() * self.weights[i]).collect();
        let acc = vjp_sum(self.model, self.samples, &coeffs);
        acc.iter().zip(v).map(|(a, x)| a.conj() + x * self.shift).collect()
    }
}
