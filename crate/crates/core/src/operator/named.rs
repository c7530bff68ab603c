//! Standard lattice Hamiltonians and observables.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::fermion::FermionOperator2nd;
use super::local::{sigma_x, sigma_y, sigma_z, LocalOperator};
use super::pauli::PauliStrings;
use crate::error::{Error, Result};
use crate::hilbert::DiscreteHilbert;
use crate::lattice::Graph;
use crate::C64;

fn check_graph(h: &DiscreteHilbert, g: &Graph) -> Result<()> {
    if h.size() != g.n_nodes() {
        return Err(Error::ShapeMismatch(format!(
            "graph has {} nodes but the space has {} sites",
            g.n_nodes(),
            h.size()
        )));
    }
    Ok(())
}

fn r(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `H = J Σ_⟨ij⟩ σᶻ_i σᶻ_j − h Σ_i σˣ_i` over order-1 edges.
pub fn ising(hilbert: Arc<DiscreteHilbert>, graph: &Graph, h: f64, j: f64) -> Result<LocalOperator> {
    check_graph(&hilbert, graph)?;
    let mut op = LocalOperator::new(hilbert.clone());
    if j != 0.0 {
        for (u, v) in graph.edges_of_order(1) {
            let zz = sigma_z(hilbert.clone(), u)?.compose(&sigma_z(hilbert.clone(), v)?)?;
            op = op.add(&zz.scale(r(j)))?;
        }
    }
    if h != 0.0 {
        for i in 0..hilbert.size() {
            op = op.add(&sigma_x(hilbert.clone(), i)?.scale(r(-h)))?;
        }
    }
    Ok(op)
}

/// The same Ising Hamiltonian assembled from Pauli strings.
pub fn ising_pauli(hilbert: Arc<DiscreteHilbert>, graph: &Graph, h: f64, j: f64) -> Result<PauliStrings> {
    check_graph(&hilbert, graph)?;
    let n = hilbert.size();
    let mut op = PauliStrings::new(hilbert)?;
    for (u, v) in graph.edges_of_order(1) {
        let mut s = vec![b'I'; n];
        s[u] = b'Z';
        s[v] = b'Z';
        op.add_string(std::str::from_utf8(&s).unwrap(), r(j))?;
    }
    for i in 0..n {
        let mut s = vec![b'I'; n];
        s[i] = b'X';
        op.add_string(std::str::from_utf8(&s).unwrap(), r(-h))?;
    }
    Ok(op)
}

/// `H = Σ_k J_k Σ_{⟨ij⟩_k} σ⃗_i·σ⃗_j` with Pauli matrices (not spin-½
/// operators), `J_k` applied to edges of neighbor order `k + 1`.
pub fn heisenberg(hilbert: Arc<DiscreteHilbert>, graph: &Graph, couplings: &[f64]) -> Result<LocalOperator> {
    check_graph(&hilbert, graph)?;
    let mut op = LocalOperator::new(hilbert.clone());
    for (k, &jk) in couplings.iter().enumerate() {
        for (u, v) in graph.edges_of_order(k + 1) {
            let xx = sigma_x(hilbert.clone(), u)?.compose(&sigma_x(hilbert.clone(), v)?)?;
            let yy = sigma_y(hilbert.clone(), u)?.compose(&sigma_y(hilbert.clone(), v)?)?;
            let zz = sigma_z(hilbert.clone(), u)?.compose(&sigma_z(hilbert.clone(), v)?)?;
            let term = xx.add(&yy)?.add(&zz)?;
            let (sites, m) = term.terms().next().map(|(s, m)| (s.clone(), m.clone())).unwrap();
            let m: DMatrix<C64> = m * r(jk);
            op.add_term(&sites, m)?;
        }
    }
    Ok(op)
}

/// `Σ_i σˣ_i`.
pub fn total_sigma_x(hilbert: Arc<DiscreteHilbert>) -> Result<LocalOperator> {
    let mut op = LocalOperator::new(hilbert.clone());
    for i in 0..hilbert.size() {
        op = op.add(&sigma_x(hilbert.clone(), i)?)?;
    }
    Ok(op)
}

/// `Σ_i σᶻ_i`.
pub fn total_sigma_z(hilbert: Arc<DiscreteHilbert>) -> Result<LocalOperator> {
    let mut op = LocalOperator::new(hilbert.clone());
    for i in 0..hilbert.size() {
        op = op.add(&sigma_z(hilbert.clone(), i)?)?;
    }
    Ok(op)
}

/// `H = −t Σ_{⟨ij⟩,σ} (c†_{iσ} c_{jσ} + h.c.) + U Σ_i n_{i↑} n_{i↓}` on a
/// spin-½ fermion space.
pub fn fermi_hubbard(hilbert: Arc<DiscreteHilbert>, graph: &Graph, t: f64, u: f64) -> Result<FermionOperator2nd> {
    let n_orb = graph.n_nodes();
    if hilbert.size() != 2 * n_orb {
        return Err(Error::ShapeMismatch(format!(
            "graph has {n_orb} nodes but the space has {} spin orbitals",
            hilbert.size()
        )));
    }
    let idx = |i: usize, sz: f64| hilbert.fermion_orbital_index(i, sz);
    let mut op = FermionOperator2nd::new(hilbert.clone())?;
    for sz in [0.5, -0.5] {
        for (a, b) in graph.edges_of_order(1) {
            let (ia, ib) = (idx(a, sz)?, idx(b, sz)?);
            op.add_term(vec![(ia, true), (ib, false)], r(-t))?;
            op.add_term(vec![(ib, true), (ia, false)], r(-t))?;
        }
    }
    for i in 0..n_orb {
        let (up, dn) = (idx(i, 0.5)?, idx(i, -0.5)?);
        op.add_term(vec![(up, true), (up, false), (dn, true), (dn, false)], r(u))?;
    }
    Ok(op)
}
