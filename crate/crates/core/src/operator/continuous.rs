//! Kinetic and potential energy terms for particles in continuous space.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hilbert::ParticleHilbert;
use crate::C64;

/// A potential `V(x)` evaluated on one sample's full coordinate vector.
pub type Potential = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// `H = −½ Σ_i (1/m_i) ∇_i² + Σ_k w_k V_k(x)`.
#[derive(Clone)]
pub struct ContinuousOperator {
    hilbert: Arc<ParticleHilbert>,
    // per-dof prefactor of −½ ∇², i.e. 1/m of the owning particle
    kinetic: Vec<f64>,
    potentials: Vec<(f64, Potential)>,
}

impl fmt::Debug for ContinuousOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ContinuousOperator")
            .field("hilbert", &self.hilbert)
            .field("kinetic", &self.kinetic)
            .field("n_potentials", &self.potentials.len())
            .finish()
    }
}

impl ContinuousOperator {
    /// `masses` has one entry per particle, or a single shared mass.
    pub fn kinetic(hilbert: Arc<ParticleHilbert>, masses: &[f64]) -> Result<Self> {
        let n = hilbert.n_particles();
        let d = hilbert.n_dim();
        if masses.len() != n && masses.len() != 1 {
            return Err(Error::ShapeMismatch(format!("expected 1 or {n} masses, got {}", masses.len())));
        }
        if masses.iter().any(|&m| !(m > 0.0)) {
            return Err(Error::InvalidArgument("masses must be positive".into()));
        }
        let kinetic = (0..n * d).map(|k| 1.0 / masses[if masses.len() == 1 { 0 } else { k / d }]).collect();
        Ok(ContinuousOperator { hilbert, kinetic, potentials: vec![] })
    }

    pub fn potential(hilbert: Arc<ParticleHilbert>, v: Potential) -> Self {
        let n = hilbert.size();
        ContinuousOperator { hilbert, kinetic: vec![0.0; n], potentials: vec![(1.0, v)] }
    }

    pub fn hilbert(&self) -> &Arc<ParticleHilbert> {
        &self.hilbert
    }

    pub fn add(&self, other: &ContinuousOperator) -> Result<ContinuousOperator> {
        if self.hilbert != other.hilbert {
            return Err(Error::HilbertMismatch);
        }
        let mut out = self.clone();
        for (a, b) in out.kinetic.iter_mut().zip(&other.kinetic) {
            *a += b;
        }
        out.potentials.extend(other.potentials.iter().cloned());
        Ok(out)
    }

    pub fn scale(&self, c: f64) -> ContinuousOperator {
        ContinuousOperator {
            hilbert: self.hilbert.clone(),
            kinetic: self.kinetic.iter().map(|k| k * c).collect(),
            potentials: self.potentials.iter().map(|(w, v)| (w * c, v.clone())).collect(),
        }
    }

    pub fn has_kinetic(&self) -> bool {
        self.kinetic.iter().any(|&k| k != 0.0)
    }

    pub fn potential_energy(&self, x: &[f64]) -> f64 {
        self.potentials.iter().map(|(w, v)| w * v(x)).sum()
    }

    /// Local energy from the spatial gradient and Hessian diagonal of `lnψ`.
    pub fn local_value(&self, x: &[f64], grad: &[C64], hess_diag: &[C64]) -> C64 {
        let kin: C64 = self
            .kinetic
            .iter()
            .zip(grad.iter().zip(hess_diag))
            .filter(|(k, _)| **k != 0.0)
            .map(|(&k, (&g, &h))| (h + g * g) * (-0.5 * k))
            .sum();
        kin + self.potential_energy(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_wavefunction_has_no_kinetic_energy() {
        let h = Arc::new(ParticleHilbert::new(2, &[f64::INFINITY], &[false]).unwrap());
        let op = ContinuousOperator::kinetic(h, &[1.0]).unwrap();
        let e = op.local_value(&[0.3, -1.0], &[C64::new(0.0, 0.0); 2], &[C64::new(0.0, 0.0); 2]);
        assert_eq!(e, C64::new(0.0, 0.0));
    }

    #[test]
    fn harmonic_eigenstate() {
        // lnψ = −|x|²/2: ∂lnψ = −x, ∂²lnψ = −1, E = Σ ½(1 − x²) + ½x² = n/2
        let h = Arc::new(ParticleHilbert::new(2, &[f64::INFINITY; 3], &[false; 3]).unwrap());
        let v: Potential = Arc::new(|x: &[f64]| 0.5 * x.iter().map(|v| v * v).sum::<f64>());
        let op = ContinuousOperator::kinetic(h.clone(), &[1.0]).unwrap().add(&ContinuousOperator::potential(h, v)).unwrap();
        let x = [0.1, -0.4, 1.3, 0.0, 2.0, -0.7];
        let g: Vec<C64> = x.iter().map(|&v| C64::new(-v, 0.0)).collect();
        let e = op.local_value(&x, &g, &vec![C64::new(-1.0, 0.0); 6]);
        assert!((e.re - 3.0).abs() < 1e-12);
        assert!(ContinuousOperator::kinetic(op.hilbert().clone(), &[0.0]).is_err());
    }
}
