//! Weighted sums of Pauli strings on two-level sites.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::local::pauli_z_values;
use super::{check_same_hilbert, Connected, DiscreteOperator, RowBuilder, PRUNE_TOL};
use crate::error::{Error, Result};
use crate::hilbert::DiscreteHilbert;
use crate::C64;

/// `Σ_k w_k P_k` with `P_k = ⊗_i σ^{a_i}`, `a_i ∈ {I, X, Y, Z}`.
#[derive(Clone, Debug)]
pub struct PauliStrings {
    hilbert: Arc<DiscreteHilbert>,
    strings: BTreeMap<Vec<u8>, C64>,
    z: Vec<[f64; 2]>,
}

// Product of single-site Pauli letters: (phase, letter).
fn letter_product(a: u8, b: u8) -> (C64, u8) {
    let i = C64::new(0.0, 1.0);
    let one = C64::new(1.0, 0.0);
    match (a, b) {
        (b'I', x) | (x, b'I') => (one, x),
        (x, y) if x == y => (one, b'I'),
        (b'X', b'Y') => (i, b'Z'),
        (b'Y', b'Z') => (i, b'X'),
        (b'Z', b'X') => (i, b'Y'),
        (b'Y', b'X') => (-i, b'Z'),
        (b'Z', b'Y') => (-i, b'X'),
        (b'X', b'Z') => (-i, b'Y'),
        _ => unreachable!(),
    }
}

impl PauliStrings {
    pub fn new(hilbert: Arc<DiscreteHilbert>) -> Result<Self> {
        let z = (0..hilbert.size()).map(|i| pauli_z_values(&hilbert, i)).collect::<Result<_>>()?;
        Ok(PauliStrings { hilbert, strings: BTreeMap::new(), z })
    }

    /// From `(letters, weight)` pairs such as `("XXI", 1.0)`.
    pub fn from_terms(hilbert: Arc<DiscreteHilbert>, terms: &[(&str, C64)]) -> Result<Self> {
        let mut op = Self::new(hilbert)?;
        for (s, w) in terms {
            op.add_string(s, *w)?;
        }
        Ok(op)
    }

    pub fn add_string(&mut self, letters: &str, w: C64) -> Result<()> {
        let bytes = letters.as_bytes().to_vec();
        if bytes.len() != self.hilbert.size() {
            return Err(Error::ShapeMismatch(format!(
                "Pauli string '{letters}' has length {}, expected {}",
                bytes.len(),
                self.hilbert.size()
            )));
        }
        if let Some(c) = bytes.iter().find(|c| !b"IXYZ".contains(c)) {
            return Err(Error::InvalidArgument(format!("unknown Pauli letter '{}'", *c as char)));
        }
        self.insert(bytes, w);
        Ok(())
    }

    fn insert(&mut self, key: Vec<u8>, w: C64) {
        let e = self.strings.entry(key).or_insert(C64::new(0.0, 0.0));
        *e += w;
        if e.norm() <= PRUNE_TOL {
            let k: Vec<Vec<u8>> = self.strings.iter().filter(|(_, v)| v.norm() <= PRUNE_TOL).map(|(k, _)| k.clone()).collect();
            for k in k {
                self.strings.remove(&k);
            }
        }
    }

    pub fn n_strings(&self) -> usize {
        self.strings.len()
    }

    pub fn strings(&self) -> impl Iterator<Item = (String, C64)> + '_ {
        self.strings.iter().map(|(k, &w)| (String::from_utf8(k.clone()).unwrap(), w))
    }

    pub fn add(&self, other: &PauliStrings) -> Result<PauliStrings> {
        check_same_hilbert(&self.hilbert, &other.hilbert)?;
        let mut out = self.clone();
        for (k, &w) in &other.strings {
            out.insert(k.clone(), w);
        }
        Ok(out)
    }

    pub fn scale(&self, c: C64) -> PauliStrings {
        let mut out = self.clone();
        out.strings = BTreeMap::new();
        for (k, &w) in &self.strings {
            out.insert(k.clone(), w * c);
        }
        out
    }

    /// Operator product `self · other`.
    pub fn compose(&self, other: &PauliStrings) -> Result<PauliStrings> {
        check_same_hilbert(&self.hilbert, &other.hilbert)?;
        let mut out = PauliStrings { hilbert: self.hilbert.clone(), strings: BTreeMap::new(), z: self.z.clone() };
        for (a, &wa) in &self.strings {
            for (b, &wb) in &other.strings {
                let mut phase = wa * wb;
                let key: Vec<u8> = a
                    .iter()
                    .zip(b)
                    .map(|(&x, &y)| {
                        let (p, l) = letter_product(x, y);
                        phase *= p;
                        l
                    })
                    .collect();
                out.insert(key, phase);
            }
        }
        Ok(out)
    }
}

impl DiscreteOperator for PauliStrings {
    fn hilbert(&self) -> &Arc<DiscreteHilbert> {
        &self.hilbert
    }

    fn get_conn(&self, s: &[f64]) -> Result<Connected> {
        self.hilbert.check_values(s)?;
        let zs: Vec<f64> = s
            .iter()
            .zip(&self.z)
            .enumerate()
            .map(|(i, (&v, z))| z[self.hilbert.local_index(i, v).unwrap()])
            .collect();
        let mut row = RowBuilder::new(s);
        let mut sp = s.to_vec();
        for (letters, &w) in &self.strings {
            let mut el = w;
            let mut flipped = false;
            for (i, &l) in letters.iter().enumerate() {
                match l {
                    b'Z' => el *= zs[i],
                    b'X' => flipped = true,
                    // ⟨s|Y|s̄⟩ = −i z(s)
                    b'Y' => {
                        el *= C64::new(0.0, -zs[i]);
                        flipped = true;
                    }
                    _ => {}
                }
            }
            if !flipped {
                row.add_diag(el);
                continue;
            }
            for (i, &l) in letters.iter().enumerate() {
                if l == b'X' || l == b'Y' {
                    let ls = self.hilbert.local_states(i);
                    sp[i] = if s[i] == ls[0] { ls[1] } else { ls[0] };
                }
            }
            row.add(&sp, el);
            sp.copy_from_slice(s);
        }
        Ok(row.finish())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn product_phase() {
        let h = Arc::new(DiscreteHilbert::spin(0.5, 2).unwrap());
        let xx = PauliStrings::from_terms(h.clone(), &[("XX", c(1.0, 0.0))]).unwrap();
        let z0 = PauliStrings::from_terms(h.clone(), &[("ZI", c(1.0, 0.0))]).unwrap();
        let yx = PauliStrings::from_terms(h, &[("YX", c(0.0, -1.0))]).unwrap();
        let prod = xx.compose(&z0).unwrap();
        assert_eq!(prod.strings().collect::<Vec<_>>(), vec![("YX".to_string(), c(0.0, -1.0))]);
        assert_eq!(prod.to_dense().unwrap(), yx.to_dense().unwrap());
        assert_eq!(prod.to_dense().unwrap(), xx.to_dense().unwrap() * z0.to_dense().unwrap());
    }

    #[test]
    fn matches_local_operator() {
        use crate::operator::{sigma_x, sigma_y, sigma_z};
        let h = Arc::new(DiscreteHilbert::qubit(3).unwrap());
        let ps = PauliStrings::from_terms(h.clone(), &[("XYZ", c(0.7, 0.2)), ("IZI", c(-1.0, 0.0))]).unwrap();
        let lo = sigma_x(h.clone(), 0)
            .unwrap()
            .compose(&sigma_y(h.clone(), 1).unwrap())
            .unwrap()
            .compose(&sigma_z(h.clone(), 2).unwrap())
            .unwrap()
            .scale(c(0.7, 0.2))
            .add(&sigma_z(h.clone(), 1).unwrap().scale(c(-1.0, 0.0)))
            .unwrap();
        assert!((ps.to_dense().unwrap() - lo.to_dense().unwrap()).norm() < 1e-14);
    }

    #[test]
    fn cancellation_prunes() {
        let h = Arc::new(DiscreteHilbert::spin(0.5, 1).unwrap());
        let a = PauliStrings::from_terms(h, &[("X", c(1.0, 0.0))]).unwrap();
        assert_eq!(a.add(&a.scale(c(-1.0, 0.0))).unwrap().n_strings(), 0);
        assert!(PauliStrings::from_terms(a.hilbert().clone(), &[("Q", c(1.0, 0.0))]).is_err());
    }
}
