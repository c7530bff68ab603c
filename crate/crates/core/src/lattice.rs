//! Graphs and periodic lattices.
//!
//! Nodes of a [`Lattice`] are numbered cell-major: the node index is the
//! row-major cell index times the cell size plus the offset index. Edges are
//! classified by neighbor order, the k-th smallest distance between nodes
//! (minimum image under periodic boundaries).

use std::collections::VecDeque;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::symmetry::{Permutation, PermutationGroup, PointGroup, PointGroupElement};

const DIST_TOL: f64 = 1e-9;
const MATCH_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub order: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    n_nodes: usize,
    edges: Vec<Edge>,
}

impl Graph {
    /// A graph whose edges all have neighbor order 1.
    pub fn from_edges(n_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let tagged: Vec<Edge> = edges.iter().map(|&(u, v)| Edge { u, v, order: 1 }).collect();
        Self::new(n_nodes, tagged)
    }

    pub fn new(n_nodes: usize, edges: Vec<Edge>) -> Result<Self> {
        let mut norm = Vec::with_capacity(edges.len());
        for e in edges {
            if e.u == e.v {
                return Err(Error::InvalidArgument(format!("self-loop on node {}", e.u)));
            }
            if e.u >= n_nodes || e.v >= n_nodes {
                return Err(Error::InvalidArgument(format!("edge ({}, {}) outside {n_nodes} nodes", e.u, e.v)));
            }
            if e.order == 0 {
                return Err(Error::InvalidArgument("neighbor order starts at 1".into()));
            }
            norm.push(Edge { u: e.u.min(e.v), v: e.u.max(e.v), order: e.order });
        }
        norm.sort_by_key(|e| (e.order, e.u, e.v));
        if norm.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("duplicate edge".into()));
        }
        Ok(Graph { n_nodes, edges: norm })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edges_of_order(&self, order: usize) -> Vec<(usize, usize)> {
        self.edges.iter().filter(|e| e.order == order).map(|e| (e.u, e.v)).collect()
    }

    pub fn max_order(&self) -> usize {
        self.edges.iter().map(|e| e.order).max().unwrap_or(0)
    }

    /// Neighbor lists over edges of every order.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_nodes];
        for e in &self.edges {
            adj[e.u].push(e.v);
            adj[e.v].push(e.u);
        }
        adj
    }

    /// Hop distances from `source` along order-1 edges; `None` if unreachable.
    pub fn bfs_distances(&self, source: usize) -> Vec<Option<usize>> {
        let mut adj = vec![Vec::new(); self.n_nodes];
        for e in self.edges.iter().filter(|e| e.order == 1) {
            adj[e.u].push(e.v);
            adj[e.v].push(e.u);
        }
        let mut dist = vec![None; self.n_nodes];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for &v in &adj[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Whether a node permutation maps the edge set (with orders) onto itself.
    pub fn is_automorphism(&self, p: &Permutation) -> bool {
        let mut mapped: Vec<Edge> = self
            .edges
            .iter()
            .map(|e| {
                let (a, b) = (p.apply_index(e.u), p.apply_index(e.v));
                Edge { u: a.min(b), v: a.max(b), order: e.order }
            })
            .collect();
        mapped.sort_by_key(|e| (e.order, e.u, e.v));
        mapped == self.edges
    }
}

#[derive(Clone, Debug)]
pub struct Lattice {
    basis: Vec<Vec<f64>>,
    basis_inv: DMatrix<f64>,
    extent: Vec<usize>,
    offsets: Vec<Vec<f64>>,
    pbc: Vec<bool>,
    positions: Vec<Vec<f64>>,
    graph: Graph,
    point_group: Option<PointGroup>,
}

fn rem_half(x: f64, l: f64) -> f64 {
    x - l * (x / l + 0.5).floor()
}

impl Lattice {
    /// `basis` rows are the lattice vectors; `offsets` are site positions in
    /// the unit cell (Cartesian).
    pub fn new(
        basis: Vec<Vec<f64>>,
        extent: Vec<usize>,
        offsets: Vec<Vec<f64>>,
        pbc: Vec<bool>,
        max_neighbor_order: usize,
    ) -> Result<Self> {
        let d = basis.len();
        if d == 0 || basis.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidArgument("basis must be a square d×d matrix".into()));
        }
        if extent.len() != d || pbc.len() != d {
            return Err(Error::InvalidArgument("extent and pbc need one entry per dimension".into()));
        }
        if offsets.is_empty() || offsets.iter().any(|o| o.len() != d) {
            return Err(Error::InvalidArgument("site offsets must be nonempty d-vectors".into()));
        }
        for k in 0..d {
            if extent[k] == 0 {
                return Err(Error::InvalidArgument("extent must be at least 1".into()));
            }
            if pbc[k] && extent[k] < 3 {
                return Err(Error::InvalidArgument(format!(
                    "periodic dimension {k} has extent {} < 3, which would duplicate edges",
                    extent[k]
                )));
            }
        }
        let a = DMatrix::from_fn(d, d, |i, j| basis[i][j]);
        let basis_inv = a
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidArgument("basis vectors are linearly dependent".into()))?;

        let n_cells: usize = extent.iter().product();
        let mut positions = Vec::with_capacity(n_cells * offsets.len());
        for c in 0..n_cells {
            let cell = unravel(c, &extent);
            for off in &offsets {
                let mut x = off.clone();
                for (k, &ck) in cell.iter().enumerate() {
                    for (xi, bi) in x.iter_mut().zip(&basis[k]) {
                        *xi += ck as f64 * bi;
                    }
                }
                positions.push(x);
            }
        }
        let mut lat = Lattice {
            basis,
            basis_inv,
            extent,
            offsets,
            pbc,
            positions,
            graph: Graph { n_nodes: 0, edges: vec![] },
            point_group: None,
        };
        lat.graph = lat.neighbor_graph(max_neighbor_order)?;
        Ok(lat)
    }

    fn neighbor_graph(&self, max_order: usize) -> Result<Graph> {
        let n = self.positions.len();
        let mut pairs = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                pairs.push((u, v, self.node_distance(u, v)));
            }
        }
        let mut dists: Vec<f64> = pairs.iter().map(|p| p.2).collect();
        dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut shells: Vec<f64> = Vec::new();
        for d in dists {
            if shells.last().is_none_or(|&s| d - s > DIST_TOL) {
                shells.push(d);
            }
            if shells.len() > max_order {
                break;
            }
        }
        let mut edges = Vec::new();
        for (u, v, d) in pairs {
            if let Some(k) = shells.iter().position(|&s| (d - s).abs() <= DIST_TOL) {
                if k < max_order {
                    edges.push(Edge { u, v, order: k + 1 });
                }
            }
        }
        Graph::new(n, edges)
    }

    // smallest distance over periodic images shifted by at most one period
    fn node_distance(&self, u: usize, v: usize) -> f64 {
        let d = self.ndim();
        let base: Vec<f64> = (0..d).map(|i| self.positions[v][i] - self.positions[u][i]).collect();
        let mut best = f64::INFINITY;
        let n_images = 3usize.pow(d as u32);
        'img: for img in 0..n_images {
            let mut shift = vec![0.0; d];
            let mut rest = img;
            for k in 0..d {
                let m = (rest % 3) as i64 - 1;
                rest /= 3;
                if m != 0 && !self.pbc[k] {
                    continue 'img;
                }
                let l = m as f64 * self.extent[k] as f64;
                for (s, b) in shift.iter_mut().zip(&self.basis[k]) {
                    *s += l * b;
                }
            }
            let r: f64 = base.iter().zip(&shift).map(|(a, s)| (a + s) * (a + s)).sum::<f64>().sqrt();
            best = best.min(r);
        }
        best
    }

    pub fn chain(length: usize, pbc: bool) -> Result<Self> {
        Self::hypercube(length, 1, pbc)
    }

    pub fn square(length: usize, pbc: bool) -> Result<Self> {
        Self::hypercube(length, 2, pbc)
    }

    /// `n_dim`-dimensional hypercubic lattice with unit spacing. The default
    /// point group is inversion in 1D, D4 in 2D and trivial otherwise.
    pub fn hypercube(length: usize, n_dim: usize, pbc: bool) -> Result<Self> {
        Self::hypercube_with_order(length, n_dim, pbc, 1)
    }

    pub fn hypercube_with_order(length: usize, n_dim: usize, pbc: bool, max_neighbor_order: usize) -> Result<Self> {
        if length == 0 || n_dim == 0 {
            return Err(Error::InvalidArgument("hypercube needs length ≥ 1 and n_dim ≥ 1".into()));
        }
        let basis: Vec<Vec<f64>> = (0..n_dim)
            .map(|i| (0..n_dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let mut lat = Self::new(basis, vec![length; n_dim], vec![vec![0.0; n_dim]], vec![pbc; n_dim], max_neighbor_order)?;
        lat.point_group = Some(match n_dim {
            1 => PointGroup::new(vec![PointGroupElement::identity(1), PointGroupElement::inversion(1)])?,
            2 => PointGroup::dihedral(4)?,
            d => PointGroup::trivial(d),
        });
        Ok(lat)
    }

    /// Triangular lattice with D6 point group about a site.
    pub fn triangular(extent: [usize; 2], pbc: bool, max_neighbor_order: usize) -> Result<Self> {
        let s = 3f64.sqrt() / 2.0;
        let mut lat = Self::new(
            vec![vec![1.0, 0.0], vec![0.5, s]],
            extent.to_vec(),
            vec![vec![0.0, 0.0]],
            vec![pbc; 2],
            max_neighbor_order,
        )?;
        lat.point_group = Some(PointGroup::dihedral(6)?);
        Ok(lat)
    }

    /// Honeycomb lattice (two sites per cell) with D6 point group about a
    /// hexagon center placed at the origin.
    pub fn honeycomb(extent: [usize; 2], pbc: bool, max_neighbor_order: usize) -> Result<Self> {
        let r3 = 3f64.sqrt();
        let mut lat = Self::new(
            vec![vec![1.0, 0.0], vec![0.5, r3 / 2.0]],
            extent.to_vec(),
            vec![vec![0.5, r3 / 6.0], vec![1.0, r3 / 3.0]],
            vec![pbc; 2],
            max_neighbor_order,
        )?;
        lat.point_group = Some(PointGroup::dihedral(6)?);
        Ok(lat)
    }

    pub fn with_point_group(mut self, pg: PointGroup) -> Result<Self> {
        if pg.dim() != self.ndim() {
            return Err(Error::InvalidArgument("point group dimension differs from lattice".into()));
        }
        self.point_group = Some(pg);
        Ok(self)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn n_nodes(&self) -> usize {
        self.positions.len()
    }

    pub fn ndim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn extent(&self) -> &[usize] {
        &self.extent
    }

    pub fn offsets(&self) -> &[Vec<f64>] {
        &self.offsets
    }

    pub fn pbc(&self) -> &[bool] {
        &self.pbc
    }

    pub fn positions(&self) -> &[Vec<f64>] {
        &self.positions
    }

    pub fn point_group(&self) -> Option<&PointGroup> {
        self.point_group.as_ref()
    }

    pub fn n_cells(&self) -> usize {
        self.extent.iter().product()
    }

    /// Coordinates of `x` in units of the basis vectors.
    pub fn fractional(&self, x: &[f64]) -> Vec<f64> {
        let d = self.ndim();
        (0..d).map(|j| (0..d).map(|i| x[i] * self.basis_inv[(i, j)]).sum()).collect()
    }

    /// Cartesian vector of an integer combination of basis vectors.
    pub fn cartesian(&self, n: &[f64]) -> Vec<f64> {
        let d = self.ndim();
        (0..d).map(|j| (0..d).map(|i| n[i] * self.basis[i][j]).sum()).collect()
    }

    /// Euclidean distance after wrapping each periodic fractional component
    /// of `x − y` into `[−L/2, L/2)`.
    pub fn minimum_image_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        let mut f = self.fractional(&diff);
        for k in 0..self.ndim() {
            if self.pbc[k] {
                f[k] = rem_half(f[k], self.extent[k] as f64);
            }
        }
        self.cartesian(&f).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Node at position `x`, identified modulo the periodic lattice vectors.
    pub fn node_at(&self, x: &[f64]) -> Option<usize> {
        for (o, off) in self.offsets.iter().enumerate() {
            let diff: Vec<f64> = x.iter().zip(off).map(|(a, b)| a - b).collect();
            let f = self.fractional(&diff);
            if f.iter().any(|v| (v - v.round()).abs() > MATCH_TOL) {
                continue;
            }
            let mut cell = Vec::with_capacity(self.ndim());
            let mut ok = true;
            for (k, v) in f.iter().enumerate() {
                let mut c = v.round() as i64;
                let l = self.extent[k] as i64;
                if self.pbc[k] {
                    c = c.rem_euclid(l);
                } else if c < 0 || c >= l {
                    ok = false;
                    break;
                }
                cell.push(c as usize);
            }
            if ok {
                return Some(ravel(&cell, &self.extent) * self.offsets.len() + o);
            }
        }
        None
    }

    /// Integer translation vectors in row-major order (index 0 is zero).
    pub fn translation_vectors(&self) -> Vec<Vec<usize>> {
        (0..self.n_cells()).map(|c| unravel(c, &self.extent)).collect()
    }

    pub fn translation_permutation(&self, t: &[usize]) -> Result<Permutation> {
        if self.pbc.iter().any(|&p| !p) {
            return Err(Error::InvalidArgument("translations need periodic boundaries in every direction".into()));
        }
        let n_off = self.offsets.len();
        let mut img = vec![0usize; self.n_nodes()];
        for (node, dst) in img.iter_mut().enumerate() {
            let cell = unravel(node / n_off, &self.extent);
            let shifted: Vec<usize> = cell.iter().zip(t).zip(&self.extent).map(|((c, t), l)| (c + t) % l).collect();
            *dst = ravel(&shifted, &self.extent) * n_off + node % n_off;
        }
        Permutation::new(img)
    }

    /// The abelian group of lattice translations acting on nodes.
    pub fn translation_group(&self) -> Result<PermutationGroup> {
        let perms = self
            .translation_vectors()
            .iter()
            .map(|t| self.translation_permutation(t))
            .collect::<Result<Vec<_>>>()?;
        PermutationGroup::from_permutations(perms)
    }

    /// Node permutation induced by a point-group element (`x ↦ R x + τ`).
    pub fn point_permutation(&self, g: &PointGroupElement) -> Result<Permutation> {
        if g.dim() != self.ndim() {
            return Err(Error::InvalidArgument("point group dimension differs from lattice".into()));
        }
        let mut img = vec![0usize; self.n_nodes()];
        for (node, dst) in img.iter_mut().enumerate() {
            let y = g.apply(&self.positions[node]);
            *dst = self.node_at(&y).ok_or_else(|| {
                Error::SymmetryMismatch(format!(
                    "{} maps node {node} at {:?} to {y:?}, which is not a lattice site",
                    g.tag(),
                    self.positions[node]
                ))
            })?;
        }
        Permutation::new(img)
    }
}

pub(crate) fn unravel(mut c: usize, extent: &[usize]) -> Vec<usize> {
    let mut out = vec![0; extent.len()];
    for k in (0..extent.len()).rev() {
        out[k] = c % extent[k];
        c /= extent[k];
    }
    out
}

pub(crate) fn ravel(cell: &[usize], extent: &[usize]) -> usize {
    cell.iter().zip(extent).fold(0, |acc, (c, l)| acc * l + c)
}
