//! Sums of K-local operators given as dense blocks.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::{check_same_hilbert, Connected, DiscreteOperator, RowBuilder, PRUNE_TOL};
use crate::error::{Error, Result};
use crate::hilbert::DiscreteHilbert;
use crate::C64;

/// `Σ_k O_k + c` where each `O_k` is a dense matrix on a sorted tuple of
/// sites. The block basis is mixed-radix over the tuple, first site most
/// significant, local states in declared order.
#[derive(Clone, Debug)]
pub struct LocalOperator {
    hilbert: Arc<DiscreteHilbert>,
    terms: BTreeMap<Vec<usize>, DMatrix<C64>>,
    constant: C64,
}

fn block_dim(h: &DiscreteHilbert, sites: &[usize]) -> usize {
    sites.iter().map(|&s| h.local_dim(s)).product()
}

// Local multi-index of `sub` (an ordered subset of `sites`) inside a
// mixed-radix index over `sites`.
fn sub_index(h: &DiscreteHilbert, sites: &[usize], idx: usize, sub: &[usize]) -> usize {
    let mut digits = vec![0; sites.len()];
    let mut rest = idx;
    for (k, &s) in sites.iter().enumerate().rev() {
        let d = h.local_dim(s);
        digits[k] = rest % d;
        rest /= d;
    }
    sub.iter().fold(0, |acc, &s| {
        let k = sites.iter().position(|&x| x == s).unwrap();
        acc * h.local_dim(s) + digits[k]
    })
}

/// Re-expresses `mat` acting on `sites` (any order) as a matrix on `target`,
/// a superset, with identity on the extra sites.
fn embed(h: &DiscreteHilbert, mat: &DMatrix<C64>, sites: &[usize], target: &[usize]) -> DMatrix<C64> {
    let n = block_dim(h, target);
    let rest: Vec<usize> = target.iter().copied().filter(|s| !sites.contains(s)).collect();
    let mut out = DMatrix::zeros(n, n);
    for r in 0..n {
        let rr = sub_index(h, target, r, &rest);
        let rs = sub_index(h, target, r, sites);
        for c in 0..n {
            if sub_index(h, target, c, &rest) != rr {
                continue;
            }
            out[(r, c)] = mat[(rs, sub_index(h, target, c, sites))];
        }
    }
    out
}

impl LocalOperator {
    pub fn new(hilbert: Arc<DiscreteHilbert>) -> Self {
        LocalOperator { hilbert, terms: BTreeMap::new(), constant: C64::new(0.0, 0.0) }
    }

    /// Single block on `sites`.
    pub fn from_term(hilbert: Arc<DiscreteHilbert>, sites: &[usize], mat: DMatrix<C64>) -> Result<Self> {
        let mut op = Self::new(hilbert);
        op.add_term(sites, mat)?;
        Ok(op)
    }

    pub fn identity(hilbert: Arc<DiscreteHilbert>) -> Self {
        Self::new(hilbert).with_constant(C64::new(1.0, 0.0))
    }

    pub fn with_constant(mut self, c: C64) -> Self {
        self.constant += c;
        self
    }

    pub fn add_term(&mut self, sites: &[usize], mat: DMatrix<C64>) -> Result<()> {
        let h = &self.hilbert;
        if sites.iter().any(|&s| s >= h.size()) {
            return Err(Error::InvalidArgument(format!("sites {sites:?} outside {} sites", h.size())));
        }
        let mut sorted = sites.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(format!("repeated site in {sites:?}")));
        }
        let d = block_dim(h, sites);
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::ShapeMismatch(format!(
                "block on {sites:?} must be {d}×{d}, got {}×{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let mat = if sorted == sites { mat } else { embed(h, &mat, sites, &sorted) };
        match self.terms.get_mut(&sorted) {
            Some(m) => *m += mat,
            None => {
                self.terms.insert(sorted, mat);
            }
        }
        Ok(())
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &DMatrix<C64>)> {
        self.terms.iter()
    }

    pub fn constant(&self) -> C64 {
        self.constant
    }

    pub fn add(&self, other: &LocalOperator) -> Result<LocalOperator> {
        check_same_hilbert(&self.hilbert, &other.hilbert)?;
        let mut out = self.clone();
        for (sites, m) in &other.terms {
            out.add_term(sites, m.clone())?;
        }
        out.constant += other.constant;
        Ok(out)
    }

    pub fn sub(&self, other: &LocalOperator) -> Result<LocalOperator> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C64) -> LocalOperator {
        LocalOperator {
            hilbert: self.hilbert.clone(),
            terms: self.terms.iter().map(|(k, m)| (k.clone(), m * c)).collect(),
            constant: self.constant * c,
        }
    }

    /// Operator product `self · other`.
    pub fn compose(&self, other: &LocalOperator) -> Result<LocalOperator> {
        check_same_hilbert(&self.hilbert, &other.hilbert)?;
        let h = &self.hilbert;
        let mut out = LocalOperator::new(h.clone());
        out.constant = self.constant * other.constant;
        for (sa, ma) in &self.terms {
            for (sb, mb) in &other.terms {
                let mut u: Vec<usize> = sa.iter().chain(sb).copied().collect();
                u.sort_unstable();
                u.dedup();
                let prod = embed(h, ma, sa, &u) * embed(h, mb, sb, &u);
                out.add_term(&u, prod)?;
            }
        }
        if other.constant != C64::new(0.0, 0.0) {
            for (sa, ma) in &self.terms {
                out.add_term(sa, ma * other.constant)?;
            }
        }
        if self.constant != C64::new(0.0, 0.0) {
            for (sb, mb) in &other.terms {
                out.add_term(sb, mb * self.constant)?;
            }
        }
        Ok(out)
    }

    pub fn adjoint(&self) -> LocalOperator {
        LocalOperator {
            hilbert: self.hilbert.clone(),
            terms: self.terms.iter().map(|(k, m)| (k.clone(), m.adjoint())).collect(),
            constant: self.constant.conj(),
        }
    }
}

impl DiscreteOperator for LocalOperator {
    fn hilbert(&self) -> &Arc<DiscreteHilbert> {
        &self.hilbert
    }

    fn get_conn(&self, s: &[f64]) -> Result<Connected> {
        let h = &self.hilbert;
        h.check_values(s)?;
        let mut row = RowBuilder::new(s);
        row.add_diag(self.constant);
        let mut sp = s.to_vec();
        for (sites, m) in &self.terms {
            let r = sites.iter().fold(0, |acc, &i| acc * h.local_dim(i) + h.local_index(i, s[i]).unwrap());
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                if v.norm() <= PRUNE_TOL {
                    continue;
                }
                if c == r {
                    row.add_diag(v);
                    continue;
                }
                let mut rest = c;
                for &i in sites.iter().rev() {
                    let d = h.local_dim(i);
                    sp[i] = h.local_states(i)[rest % d];
                    rest /= d;
                }
                row.add(&sp, v);
                for &i in sites {
                    sp[i] = s[i];
                }
            }
        }
        Ok(row.finish())
    }
}

// σᶻ eigenvalue of the local state with index `k`: spin values are ±1
// directly; occupation numbers {0, 1} map to 1 − 2n.
pub(crate) fn pauli_z_values(h: &DiscreteHilbert, site: usize) -> Result<[f64; 2]> {
    match h.local_states(site) {
        [a, b] if *a == -1.0 && *b == 1.0 => Ok([-1.0, 1.0]),
        [a, b] if *a == 0.0 && *b == 1.0 => Ok([1.0, -1.0]),
        other => Err(Error::Unsupported(format!("Pauli operators need a two-level site, site {site} has {other:?}"))),
    }
}

fn pauli_block(h: &DiscreteHilbert, site: usize, letter: char) -> Result<DMatrix<C64>> {
    let z = pauli_z_values(h, site)?;
    let c = |re: f64, im: f64| C64::new(re, im);
    Ok(match letter {
        'X' => DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]),
        // ⟨a|Y|b⟩ = −i z_a for a ≠ b
        'Y' => DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -z[0]), c(0.0, -z[1]), c(0.0, 0.0)]),
        'Z' => DMatrix::from_row_slice(2, 2, &[c(z[0], 0.0), c(0.0, 0.0), c(0.0, 0.0), c(z[1], 0.0)]),
        _ => unreachable!(),
    })
}

pub fn sigma_x(hilbert: Arc<DiscreteHilbert>, site: usize) -> Result<LocalOperator> {
    let m = pauli_block(&hilbert, site, 'X')?;
    LocalOperator::from_term(hilbert, &[site], m)
}

pub fn sigma_y(hilbert: Arc<DiscreteHilbert>, site: usize) -> Result<LocalOperator> {
    let m = pauli_block(&hilbert, site, 'Y')?;
    LocalOperator::from_term(hilbert, &[site], m)
}

pub fn sigma_z(hilbert: Arc<DiscreteHilbert>, site: usize) -> Result<LocalOperator> {
    let m = pauli_block(&hilbert, site, 'Z')?;
    LocalOperator::from_term(hilbert, &[site], m)
}

fn fock_check(h: &DiscreteHilbert, site: usize) -> Result<usize> {
    let ls = h.local_states(site);
    if ls.iter().enumerate().any(|(k, &v)| v != k as f64) {
        return Err(Error::Unsupported(format!("site {site} is not an occupation-number site")));
    }
    Ok(ls.len())
}

/// Bosonic `b†` truncated at the local cutoff.
pub fn boson_create(hilbert: Arc<DiscreteHilbert>, site: usize) -> Result<LocalOperator> {
    let d = fock_check(&hilbert, site)?;
    let m = DMatrix::from_fn(d, d, |r, c| if r == c + 1 { C64::new((r as f64).sqrt(), 0.0) } else { C64::new(0.0, 0.0) });
    LocalOperator::from_term(hilbert, &[site], m)
}

pub fn boson_destroy(hilbert: Arc<DiscreteHilbert>, site: usize) -> Result<LocalOperator> {
    Ok(boson_create(hilbert, site)?.adjoint())
}

pub fn number(hilbert: Arc<DiscreteHilbert>, site: usize) -> Result<LocalOperator> {
    let d = fock_check(&hilbert, site)?;
    let m = DMatrix::from_fn(d, d, |r, c| if r == c { C64::new(r as f64, 0.0) } else { C64::new(0.0, 0.0) });
    LocalOperator::from_term(hilbert, &[site], m)
}
