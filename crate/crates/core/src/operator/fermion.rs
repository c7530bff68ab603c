//! Second-quantized fermionic operators in the occupation-number basis.
//!
//! Orbitals are ordered as in the Hilbert space layout and the Jordan–Wigner
//! sign of an orbital counts the occupied orbitals before it.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::pauli::PauliStrings;
use super::{check_same_hilbert, Connected, DiscreteOperator, RowBuilder, PRUNE_TOL};
use crate::error::{Error, Result};
use crate::hilbert::DiscreteHilbert;
use crate::C64;

type Term = Vec<(usize, bool)>;

/// `Σ_k w_k Π_j a_{o_j}^{(†)}` with the product applied right to left.
#[derive(Clone, Debug)]
pub struct FermionOperator2nd {
    hilbert: Arc<DiscreteHilbert>,
    terms: BTreeMap<Term, C64>,
    constant: C64,
}

/// `(−1)^{Σ_{j<i} n_j}`.
pub fn jw_sign(n: &[f64], orbital: usize) -> f64 {
    let occupied = n[..orbital].iter().filter(|&&v| v != 0.0).count();
    if occupied % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Parses `"1^ 2"` into `[(1, true), (2, false)]`.
fn parse_term(s: &str) -> Result<Term> {
    s.split_whitespace()
        .map(|tok| {
            let (num, dag) = match tok.strip_suffix('^') {
                Some(n) => (n, true),
                None => (tok, false),
            };
            num.parse::<usize>()
                .map(|o| (o, dag))
                .map_err(|_| Error::InvalidArgument(format!("bad fermion operator token '{tok}'")))
        })
        .collect()
}

// Applies one ladder operator to |n⟩ in place; returns the sign or None if
// the state is annihilated.
fn apply_ladder(n: &mut [f64], orbital: usize, dagger: bool) -> Option<f64> {
    let occ = n[orbital] != 0.0;
    if occ == dagger {
        return None;
    }
    let sign = jw_sign(n, orbital);
    n[orbital] = if dagger { 1.0 } else { 0.0 };
    Some(sign)
}

impl FermionOperator2nd {
    pub fn new(hilbert: Arc<DiscreteHilbert>) -> Result<Self> {
        for i in 0..hilbert.size() {
            if hilbert.local_states(i) != [0.0, 1.0] {
                return Err(Error::Unsupported("fermion operators need an occupation-number basis".into()));
            }
        }
        Ok(FermionOperator2nd { hilbert, terms: BTreeMap::new(), constant: C64::new(0.0, 0.0) })
    }

    /// From `(text, weight)` pairs, e.g. `("1^ 2", 0.5)` for `0.5 f†₁ f₂`.
    pub fn from_strings(hilbert: Arc<DiscreteHilbert>, terms: &[(&str, C64)]) -> Result<Self> {
        let mut op = Self::new(hilbert)?;
        for (s, w) in terms {
            op.add_term(parse_term(s)?, *w)?;
        }
        Ok(op)
    }

    pub fn add_term(&mut self, term: Vec<(usize, bool)>, w: C64) -> Result<()> {
        if let Some(&(o, _)) = term.iter().find(|(o, _)| *o >= self.hilbert.size()) {
            return Err(Error::InvalidArgument(format!("orbital {o} outside {} orbitals", self.hilbert.size())));
        }
        if term.is_empty() {
            self.constant += w;
            return Ok(());
        }
        let e = self.terms.entry(term).or_insert(C64::new(0.0, 0.0));
        *e += w;
        Ok(())
    }

    pub fn create(hilbert: Arc<DiscreteHilbert>, orbital: usize) -> Result<Self> {
        let mut op = Self::new(hilbert)?;
        op.add_term(vec![(orbital, true)], C64::new(1.0, 0.0))?;
        Ok(op)
    }

    pub fn destroy(hilbert: Arc<DiscreteHilbert>, orbital: usize) -> Result<Self> {
        let mut op = Self::new(hilbert)?;
        op.add_term(vec![(orbital, false)], C64::new(1.0, 0.0))?;
        Ok(op)
    }

    pub fn number(hilbert: Arc<DiscreteHilbert>, orbital: usize) -> Result<Self> {
        let mut op = Self::new(hilbert)?;
        op.add_term(vec![(orbital, true), (orbital, false)], C64::new(1.0, 0.0))?;
        Ok(op)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_same_hilbert(&self.hilbert, &other.hilbert)?;
        let mut out = self.clone();
        for (t, &w) in &other.terms {
            out.add_term(t.clone(), w)?;
        }
        out.constant += other.constant;
        Ok(out)
    }

    pub fn scale(&self, c: C64) -> Self {
        FermionOperator2nd {
            hilbert: self.hilbert.clone(),
            terms: self.terms.iter().map(|(t, &w)| (t.clone(), w * c)).collect(),
            constant: self.constant * c,
        }
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        check_same_hilbert(&self.hilbert, &other.hilbert)?;
        let mut out = Self::new(self.hilbert.clone())?;
        let with_const = |op: &Self| -> Vec<(Term, C64)> {
            let mut v: Vec<(Term, C64)> = op.terms.iter().map(|(t, &w)| (t.clone(), w)).collect();
            v.push((vec![], op.constant));
            v
        };
        for (ta, wa) in with_const(self) {
            for (tb, wb) in with_const(other) {
                let mut t = ta.clone();
                t.extend_from_slice(&tb);
                out.add_term(t, wa * wb)?;
            }
        }
        Ok(out)
    }

    pub fn adjoint(&self) -> Self {
        FermionOperator2nd {
            hilbert: self.hilbert.clone(),
            terms: self
                .terms
                .iter()
                .map(|(t, &w)| (t.iter().rev().map(|&(o, d)| (o, !d)).collect(), w.conj()))
                .collect(),
            constant: self.constant.conj(),
        }
    }

    /// The same operator as Pauli strings, using
    /// `f†_i = Z_0 ⋯ Z_{i−1} (X_i − iY_i)/2` with `Z = (−1)^n`.
    pub fn to_pauli_strings(&self) -> Result<PauliStrings> {
        let h = self.hilbert.clone();
        let n = h.size();
        let half = C64::new(0.5, 0.0);
        let ladder = |o: usize, dagger: bool| -> Result<PauliStrings> {
            let mut xs: Vec<u8> = vec![b'I'; n];
            for z in xs.iter_mut().take(o) {
                *z = b'Z';
            }
            let mut ys = xs.clone();
            xs[o] = b'X';
            ys[o] = b'Y';
            let sign = if dagger { -1.0 } else { 1.0 };
            PauliStrings::from_terms(
                h.clone(),
                &[
                    (std::str::from_utf8(&xs).unwrap(), half),
                    (std::str::from_utf8(&ys).unwrap(), C64::new(0.0, 0.5 * sign)),
                ],
            )
        };
        let identity = PauliStrings::from_terms(h.clone(), &[(&"I".repeat(n), C64::new(1.0, 0.0))])?;
        let mut total = identity.scale(self.constant);
        for (t, &w) in &self.terms {
            let mut prod = identity.scale(w);
            for &(o, d) in t {
                prod = prod.compose(&ladder(o, d)?)?;
            }
            total = total.add(&prod)?;
        }
        Ok(total)
    }
}

impl DiscreteOperator for FermionOperator2nd {
    fn hilbert(&self) -> &Arc<DiscreteHilbert> {
        &self.hilbert
    }

    // ⟨s|O|s′⟩ = conj(⟨s′|O†|s⟩): apply the adjoint ladder sequence to |s⟩
    fn get_conn(&self, s: &[f64]) -> Result<Connected> {
        self.hilbert.check_values(s)?;
        let mut row = RowBuilder::new(s);
        row.add_diag(self.constant);
        let mut n = s.to_vec();
        for (t, &w) in &self.terms {
            if w.norm() <= PRUNE_TOL {
                continue;
            }
            n.copy_from_slice(s);
            let mut sign = 1.0;
            let mut alive = true;
            for &(o, d) in t {
                match apply_ladder(&mut n, o, !d) {
                    Some(sg) => sign *= sg,
                    None => {
                        alive = false;
                        break;
                    }
                }
            }
            if alive {
                row.add(&n, w * sign);
            }
        }
        Ok(row.finish())
    }
}
