//! Local estimators `Ã(s) = Σ_{s′} ⟨s|Ô|s′⟩ ψ(s′)/ψ(s)`.

use rayon::prelude::*;

use super::continuous::ContinuousOperator;
use super::DiscreteOperator;
use crate::batch::Batch;
use crate::error::{Error, Result};
use crate::model::{chunked_apply, BoundModel};
use crate::C64;

/// Anything with a local estimator over a batch of samples.
pub trait Observable: Send + Sync {
    /// `log_psi[i]` must be `lnψ` of row `i`; `chunk` bounds how many
    /// samples are processed together.
    fn local_values(&self, model: &dyn BoundModel, samples: &Batch, log_psi: &[C64], chunk: Option<usize>) -> Result<Vec<C64>>;
}

fn check_log_psi(l: C64) -> Result<()> {
    if l.re == f64::NEG_INFINITY {
        Err(Error::EstimatorSingular)
    } else if !l.re.is_finite() || !l.im.is_finite() {
        Err(Error::NonFinite("log-amplitude at a sample".into()))
    } else {
        Ok(())
    }
}

fn discrete_value<O: DiscreteOperator + ?Sized>(op: &O, model: &dyn BoundModel, s: &[f64], lpsi: C64) -> Result<C64> {
    check_log_psi(lpsi)?;
    let conn = op.get_conn(s)?;
    // the first entry is s itself
    let mut acc = conn.elements[0];
    for (sp, &e) in conn.configs.rows().zip(&conn.elements).skip(1) {
        acc += e * (model.log_psi(sp) - lpsi).exp();
    }
    Ok(acc)
}

/// `Ã(s)` for a single configuration.
pub fn local_estimator<O: DiscreteOperator + ?Sized>(op: &O, model: &dyn BoundModel, s: &[f64]) -> Result<C64> {
    discrete_value(op, model, s, model.log_psi(s))
}

fn check_batch(samples: &Batch, log_psi: &[C64]) -> Result<()> {
    if samples.len() != log_psi.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} samples but {} log-amplitudes",
            samples.len(),
            log_psi.len()
        )));
    }
    Ok(())
}

impl<T: DiscreteOperator + ?Sized> Observable for T {
    fn local_values(&self, model: &dyn BoundModel, samples: &Batch, log_psi: &[C64], chunk: Option<usize>) -> Result<Vec<C64>> {
        check_batch(samples, log_psi)?;
        let n = samples.len();
        let size = chunk.unwrap_or(n).max(1);
        let mut out = Vec::with_capacity(n);
        for start in (0..n).step_by(size) {
            let end = (start + size).min(n);
            let vals: Vec<Result<C64>> = (start..end)
                .into_par_iter()
                .map(|i| discrete_value(self, model, samples.row(i), log_psi[i]))
                .collect();
            for v in vals {
                out.push(v?);
            }
        }
        Ok(out)
    }
}

impl ContinuousOperator {
    /// `E_loc(x)` from the model's spatial derivatives.
    pub fn local_estimator(&self, model: &dyn BoundModel, x: &[f64]) -> Result<C64> {
        let (g, h) = model
            .spatial_derivatives(x)
            .ok_or_else(|| Error::Unsupported("model has no spatial derivatives".into()))?;
        Ok(self.local_value(x, &g, &h))
    }
}

impl Observable for ContinuousOperator {
    fn local_values(&self, model: &dyn BoundModel, samples: &Batch, log_psi: &[C64], chunk: Option<usize>) -> Result<Vec<C64>> {
        check_batch(samples, log_psi)?;
        let out: Vec<Result<C64>> = chunked_apply(samples, chunk, |b| {
            (0..b.len()).into_par_iter().map(|i| self.local_estimator(model, b.row(i))).collect()
        });
        out.into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::hilbert::{DiscreteHilbert, ParticleHilbert};
    use crate::lattice::Lattice;
    use crate::model::{log_psi_batch, DType, Gaussian, Model, ParamTree, Rbm};
    use crate::operator::{ising, sigma_x, sigma_z, Potential};
    use crate::rng::RngKey;
    use rand::Rng;

    #[test]
    fn trivial_cases() {
        let h = Arc::new(DiscreteHilbert::spin(0.5, 1).unwrap());
        let rbm = Rbm::new(1, 1.0, DType::C64);
        let zero = ParamTree::zeros(rbm.layout()).unwrap();
        let uniform = rbm.bind(&zero).unwrap();
        let x = sigma_x(h.clone(), 0).unwrap();
        for s in [[-1.0], [1.0]] {
            assert!((local_estimator(&x, &*uniform, &s).unwrap() - 1.0).norm() < 1e-15);
        }
        let p = rbm.init_params(RngKey::new(1)).unwrap();
        let b = rbm.bind(&p).unwrap();
        let z = sigma_z(h, 0).unwrap();
        assert_eq!(local_estimator(&z, &*b, &[-1.0]).unwrap(), C64::new(-1.0, 0.0));
    }

    #[test]
    fn full_summation_matches_dense() {
        let h = Arc::new(DiscreteHilbert::spin(0.5, 4).unwrap());
        let g = Lattice::chain(4, true).unwrap();
        let op = ising(h.clone(), g.graph(), 1.0, 1.0).unwrap();
        let rbm = Rbm::new(4, 1.0, DType::C64);
        let p = crate::model::testing::scaled_params(&rbm, RngKey::new(4), 0.5);
        let b = rbm.bind(&p).unwrap();
        let all = h.all_states().unwrap();
        let lp = log_psi_batch(&*b, &all, None);
        let psi: Vec<C64> = lp.iter().map(|l| l.exp()).collect();
        let norm: f64 = psi.iter().map(|v| v.norm_sqr()).sum();
        let dense = op.to_dense().unwrap();
        let v = nalgebra::DVector::from_vec(psi.clone());
        let exact = (v.adjoint() * &dense * &v)[(0, 0)] / norm;
        for chunk in [None, Some(3)] {
            let loc = op.local_values(&*b, &all, &lp, chunk).unwrap();
            let est: C64 = loc.iter().zip(&psi).map(|(e, p)| e * p.norm_sqr() / norm).sum();
            assert!((est - exact).norm() < 1e-12);
        }
    }

    #[test]
    fn harmonic_local_energy_is_constant() {
        let hil = Arc::new(ParticleHilbert::new(10, &[f64::INFINITY; 3], &[false; 3]).unwrap());
        let v: Potential = Arc::new(|x: &[f64]| 0.5 * x.iter().map(|v| v * v).sum::<f64>());
        let op = ContinuousOperator::kinetic(hil.clone(), &[1.0]).unwrap().add(&ContinuousOperator::potential(hil, v)).unwrap();
        let m = Gaussian::new(30, DType::F64);
        let p = m.isotropic_params(2.0).unwrap();
        let b = m.bind(&p).unwrap();
        let mut rng = RngKey::new(0).rng();
        for _ in 0..10 {
            let x: Vec<f64> = (0..30).map(|_| rng.random_range(-3.0..3.0)).collect();
            assert!((op.local_estimator(&*b, &x).unwrap() - 15.0).norm() < 1e-10);
        }
        let rbm = Rbm::new(30, 1.0, DType::F64);
        let q = rbm.init_params(RngKey::new(0)).unwrap();
        assert!(op.local_estimator(&*rbm.bind(&q).unwrap(), &[0.0; 30]).is_err());
    }

    #[test]
    fn vanishing_amplitude_is_an_error() {
        use crate::model::Gcnn;
        use crate::symmetry::{Permutation, PermutationGroup};
        let swap = Permutation::new(vec![1, 0]).unwrap();
        let g = Arc::new(PermutationGroup::from_permutations(vec![Permutation::identity(2), swap]).unwrap());
        let m = Gcnn::new(g, vec![1], vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0)], DType::C64).unwrap();
        let p = m.init_params(RngKey::new(0)).unwrap();
        let h = Arc::new(DiscreteHilbert::spin(0.5, 2).unwrap());
        let op = sigma_x(h, 0).unwrap();
        assert!(matches!(local_estimator(&op, &*m.bind(&p).unwrap(), &[1.0, 1.0]), Err(Error::EstimatorSingular)));
    }
}
