//! Exact reference results on enumerable spaces: diagonalization, time
//! evolution and dense model states.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::hilbert::DiscreteHilbert;
use crate::model::{log_psi_batch, BoundModel};
use crate::operator::{DiscreteOperator, SparseMatrix, DENSE_CAP};
use crate::C64;

/// Above this dimension the ground state is found by Lanczos.
pub const DENSE_EIGEN_CAP: usize = 1 << 12;

const HERMITIAN_TOL: f64 = 1e-10;

/// Amplitudes over the basis enumeration order.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    pub amplitudes: Vec<C64>,
}

impl DenseState {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite("dense state amplitude".into()));
        }
        Ok(DenseState { amplitudes })
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> DenseState {
        let n = self.norm();
        DenseState { amplitudes: self.amplitudes.iter().map(|a| a / n).collect() }
    }

    /// `Σ_i |ψ_i|² / ‖ψ‖²`-weighted probabilities.
    pub fn probabilities(&self) -> Vec<f64> {
        let z = self.norm().powi(2);
        self.amplitudes.iter().map(|a| a.norm_sqr() / z).collect()
    }

    /// `⟨ψ|M|ψ⟩ / ⟨ψ|ψ⟩`.
    pub fn expect_matrix(&self, m: &DMatrix<C64>) -> C64 {
        let v = DVector::from_column_slice(&self.amplitudes);
        (v.adjoint() * m * &v)[(0, 0)] / v.norm_squared()
    }

    pub fn expect(&self, op: &dyn DiscreteOperator) -> Result<C64> {
        let m = op.to_sparse()?;
        if m.dim() != self.len() {
            return Err(Error::ShapeMismatch(format!("state of {} for operator of {}", self.len(), m.dim())));
        }
        let hv = m.matvec(&self.amplitudes);
        let num: C64 = self.amplitudes.iter().zip(&hv).map(|(a, b)| a.conj() * b).sum();
        Ok(num / self.norm().powi(2))
    }

    /// `|⟨a|b⟩|² / (‖a‖²‖b‖²)`.
    pub fn fidelity(&self, other: &DenseState) -> f64 {
        let o: C64 = self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum();
        o.norm_sqr() / (self.norm().powi(2) * other.norm().powi(2))
    }
}

fn hermitian_dense(op: &dyn DiscreteOperator) -> Result<DMatrix<C64>> {
    let m = op.to_dense()?;
    check_hermitian(&m)?;
    Ok(m)
}

fn check_hermitian(m: &DMatrix<C64>) -> Result<()> {
    let scale = m.iter().map(|x| x.norm()).fold(1.0, f64::max);
    let dev = (m - m.adjoint()).iter().map(|x| x.norm()).fold(0.0, f64::max);
    if dev > HERMITIAN_TOL * scale {
        return Err(Error::InvalidArgument(format!("operator is not Hermitian (deviation {dev:e})")));
    }
    Ok(())
}

/// Full spectrum in ascending order.
pub fn ed_spectrum(op: &dyn DiscreteOperator) -> Result<Vec<f64>> {
    let m = hermitian_dense(op)?;
    if m.nrows() > DENSE_EIGEN_CAP {
        return Err(Error::CapExceeded { what: "dense eigensolver dimension", value: m.nrows(), limit: DENSE_EIGEN_CAP });
    }
    let mut e: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(|a, b| a.total_cmp(b));
    Ok(e)
}

/// Smallest eigenpair: dense up to [`DENSE_EIGEN_CAP`], Lanczos with full
/// reorthogonalization beyond.
pub fn ed_ground_state(op: &dyn DiscreteOperator) -> Result<(f64, DenseState)> {
    let n = op.hilbert().n_states()?;
    if n > DENSE_CAP {
        return Err(Error::CapExceeded { what: "basis size", value: n, limit: DENSE_CAP });
    }
    if n <= DENSE_EIGEN_CAP {
        let m = hermitian_dense(op)?;
        let eig = SymmetricEigen::new(m);
        let (k, e0) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, &e)| (k, e))
            .unwrap();
        let v = eig.eigenvectors.column(k).iter().copied().collect();
        return Ok((e0, DenseState::new(v)?));
    }
    let m = op.to_sparse()?;
    lanczos_ground(&m, 300, 1e-12)
}

/// Lowest eigenpair of a Hermitian sparse matrix.
pub fn lanczos_ground(m: &SparseMatrix, max_steps: usize, tol: f64) -> Result<(f64, DenseState)> {
    let n = m.dim();
    let steps = max_steps.min(n).max(1);
    // deterministic, generic start vector
    let mut v: Vec<C64> = (0..n).map(|i| C64::new(1.0 + ((i * 7919) % 101) as f64 / 101.0, 0.0)).collect();
    let nv = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= nv);
    let mut basis: Vec<Vec<C64>> = vec![v];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut last = f64::INFINITY;
    loop {
        let j = basis.len() - 1;
        let mut w = m.matvec(&basis[j]);
        let a: C64 = basis[j].iter().zip(&w).map(|(x, y)| x.conj() * y).sum();
        alpha.push(a.re);
        // full reorthogonalization, twice for stability
        for _ in 0..2 {
            for b in &basis {
                let c: C64 = b.iter().zip(&w).map(|(x, y)| x.conj() * y).sum();
                w.iter_mut().zip(b).for_each(|(y, x)| *y -= c * x);
            }
        }
        let bn = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let k = alpha.len();
        let t = DMatrix::from_fn(k, k, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c || c + 1 == r {
                beta[r.min(c)]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let (idx, e0) = eig.eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(i, &e)| (i, e)).unwrap();
        let done = bn < 1e-13 || k >= steps || (last - e0).abs() < tol * e0.abs().max(1.0);
        if done {
            let y = eig.eigenvectors.column(idx);
            let mut psi = vec![C64::new(0.0, 0.0); n];
            for (b, &c) in basis.iter().zip(y.iter()) {
                psi.iter_mut().zip(b).for_each(|(p, x)| *p += x * c);
            }
            return Ok((e0, DenseState::new(psi)?));
        }
        last = e0;
        beta.push(bn);
        basis.push(w.iter().map(|x| x / bn).collect());
    }
}

/// Precomputed eigendecomposition for repeated `e^{−iHt}` evaluations.
pub struct Propagator {
    values: DVector<f64>,
    vectors: DMatrix<C64>,
}

impl Propagator {
    pub fn new(op: &dyn DiscreteOperator) -> Result<Self> {
        let m = hermitian_dense(op)?;
        if m.nrows() > DENSE_EIGEN_CAP {
            return Err(Error::CapExceeded { what: "dense eigensolver dimension", value: m.nrows(), limit: DENSE_EIGEN_CAP });
        }
        let eig = SymmetricEigen::new(m);
        Ok(Propagator { values: eig.eigenvalues, vectors: eig.eigenvectors })
    }

    pub fn evolve(&self, psi0: &DenseState, t: f64) -> Result<DenseState> {
        if psi0.len() != self.values.len() {
            return Err(Error::ShapeMismatch(format!("state of {} for operator of {}", psi0.len(), self.values.len())));
        }
        let c = self.vectors.ad_mul(&DVector::from_column_slice(&psi0.amplitudes));
        let phased = DVector::from_iterator(c.len(), c.iter().zip(self.values.iter()).map(|(x, &e)| x * C64::new(0.0, -e * t).exp()));
        DenseState::new((&self.vectors * phased).iter().copied().collect())
    }
}

/// `e^{−iHt} ψ₀`.
pub fn exact_evolve(op: &dyn DiscreteOperator, psi0: &DenseState, t: f64) -> Result<DenseState> {
    Propagator::new(op)?.evolve(psi0, t)
}

/// `ψ_i = exp(lnψ(s_i) − max Re lnψ)` over the enumeration order.
pub fn dense_model_state(hilbert: &DiscreteHilbert, model: &dyn BoundModel) -> Result<DenseState> {
    let n = hilbert.n_states()?;
    if n > DENSE_CAP {
        return Err(Error::CapExceeded { what: "basis size", value: n, limit: DENSE_CAP });
    }
    let lp = log_psi_batch(model, &hilbert.all_states()?, None);
    let m = lp.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return Err(Error::NonFinite("model log-amplitudes".into()));
    }
    DenseState::new(lp.iter().map(|l| (l - m).exp()).collect())
}
