//! Sparse-by-rows operators.
//!
//! Every discrete operator answers [`DiscreteOperator::get_conn`]: for a
//! configuration `s` it lists the `s′` with nonzero `⟨s|Ô|s′⟩` together with
//! the elements. The first entry is always `s` itself with the diagonal
//! element, even when that element is zero.

mod continuous;
mod estimator;
mod fermion;
mod local;
mod named;
mod pauli;

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::batch::Batch;
use crate::error::{Error, Result};
use crate::hilbert::DiscreteHilbert;
use crate::C64;

pub use continuous::{ContinuousOperator, Potential};
pub use estimator::{local_estimator, Observable};
pub use fermion::{jw_sign, FermionOperator2nd};
pub use local::{boson_create, boson_destroy, number, sigma_x, sigma_y, sigma_z, LocalOperator};
pub use named::{fermi_hubbard, heisenberg, ising, ising_pauli, total_sigma_x, total_sigma_z};
pub use pauli::PauliStrings;

/// Matrix elements smaller than this are dropped from connected sets.
pub const PRUNE_TOL: f64 = 1e-14;

/// Largest basis for which dense and sparse matrices are assembled.
pub const DENSE_CAP: usize = 1 << 14;

/// One row of an operator: connected configurations and `⟨s|Ô|s′⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct Connected {
    pub configs: Batch,
    pub elements: Vec<C64>,
}

impl Connected {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Collects off-diagonal contributions, merging repeated `s′`, in first-seen
/// order so that results are deterministic.
pub(crate) struct RowBuilder {
    width: usize,
    diag: C64,
    configs: Vec<f64>,
    elements: Vec<C64>,
    seen: HashMap<Vec<u64>, usize>,
}

impl RowBuilder {
    pub(crate) fn new(s: &[f64]) -> Self {
        RowBuilder {
            width: s.len(),
            diag: C64::new(0.0, 0.0),
            configs: s.to_vec(),
            elements: vec![C64::new(0.0, 0.0)],
            seen: HashMap::new(),
        }
    }

    pub(crate) fn add_diag(&mut self, v: C64) {
        self.diag += v;
    }

    pub(crate) fn add(&mut self, sp: &[f64], v: C64) {
        if sp == &self.configs[..self.width] {
            self.diag += v;
            return;
        }
        let key: Vec<u64> = sp.iter().map(|x| x.to_bits()).collect();
        match self.seen.get(&key) {
            Some(&i) => self.elements[i] += v,
            None => {
                self.seen.insert(key, self.elements.len());
                self.elements.push(v);
                self.configs.extend_from_slice(sp);
            }
        }
    }

    pub(crate) fn finish(mut self) -> Connected {
        self.elements[0] = self.diag;
        let mut configs = Batch::with_capacity(self.width, self.elements.len());
        let mut elements = Vec::with_capacity(self.elements.len());
        for (i, &e) in self.elements.iter().enumerate() {
            if i == 0 || e.norm() > PRUNE_TOL {
                configs.push(&self.configs[i * self.width..(i + 1) * self.width]).unwrap();
                elements.push(e);
            }
        }
        Connected { configs, elements }
    }
}

/// Row-compressed sparse matrix over the basis enumeration order.
#[derive(Clone, Debug)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        (0..self.n)
            .into_par_iter()
            .map(|i| (self.row_ptr[i]..self.row_ptr[i + 1]).map(|k| self.vals[k] * x[self.cols[k]]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[k])] += self.vals[k];
            }
        }
        m
    }
}

pub trait DiscreteOperator: Send + Sync {
    fn hilbert(&self) -> &Arc<DiscreteHilbert>;

    fn get_conn(&self, s: &[f64]) -> Result<Connected>;

    /// Dense matrix in the basis enumeration order.
    fn to_dense(&self) -> Result<DMatrix<C64>> {
        Ok(self.to_sparse()?.to_dense())
    }

    fn to_sparse(&self) -> Result<SparseMatrix> {
        let h = self.hilbert();
        let n = h.n_states()?;
        if n > DENSE_CAP {
            return Err(Error::CapExceeded { what: "basis size", value: n, limit: DENSE_CAP });
        }
        let rows: Vec<Vec<(usize, C64)>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let s = h.index_to_config(i)?;
                let conn = self.get_conn(&s)?;
                let mut row: Vec<(usize, C64)> = Vec::with_capacity(conn.len());
                for (sp, &e) in conn.configs.rows().zip(&conn.elements) {
                    let j = h.config_to_index(sp).map_err(|_| {
                        Error::ConstraintViolation(format!("operator connects {s:?} to {sp:?}, outside the space"))
                    })?;
                    row.push((j, e));
                }
                row.sort_by_key(|p| p.0);
                Ok(row)
            })
            .collect::<Result<_>>()?;
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (j, e) in row {
                cols.push(j);
                vals.push(e);
            }
            row_ptr.push(cols.len());
        }
        Ok(SparseMatrix { n, row_ptr, cols, vals })
    }
}

pub(crate) fn check_same_hilbert(a: &DiscreteHilbert, b: &DiscreteHilbert) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::HilbertMismatch)
    }
}
