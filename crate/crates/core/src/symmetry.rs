//! Permutation groups, point groups, character tables and space groups.
//!
//! A [`Permutation`] `p` sends site `i` to site `p[i]`; acting on a
//! configuration it moves the value on `i` to `p[i]`. Composition `g∘h`
//! applies `h` first, so `(g∘h)·s = g·(h·s)`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::C64;

/// Groups larger than this are refused by [`PermutationGroup::character_table`].
pub const CHARACTER_TABLE_CAP: usize = 1024;

const EIG_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(image: Vec<usize>) -> Result<Self> {
        let n = image.len();
        let mut seen = vec![false; n];
        for &i in &image {
            if i >= n || seen[i] {
                return Err(Error::InvalidArgument(format!("{image:?} is not a permutation")));
            }
            seen[i] = true;
        }
        Ok(Permutation(image))
    }

    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn image(&self) -> &[usize] {
        &self.0
    }

    pub fn apply_index(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &p)| i == p)
    }

    /// `self ∘ other`: apply `other`, then `self`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation(other.0.iter().map(|&i| self.0[i]).collect())
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.0.len()];
        for (i, &p) in self.0.iter().enumerate() {
            inv[p] = i;
        }
        Permutation(inv)
    }

    /// `(p·s)[p[i]] = s[i]`.
    pub fn act(&self, s: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; s.len()];
        self.act_into(s, &mut out)?;
        Ok(out)
    }

    pub fn act_into(&self, s: &[f64], out: &mut [f64]) -> Result<()> {
        if s.len() != self.0.len() || out.len() != self.0.len() {
            return Err(Error::ShapeMismatch(format!(
                "permutation of {} sites applied to {} entries",
                self.0.len(),
                s.len()
            )));
        }
        for (i, &p) in self.0.iter().enumerate() {
            out[p] = s[i];
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct PermutationGroup {
    elements: Vec<Permutation>,
    tags: Vec<String>,
    table: Vec<usize>,
    inverse: Vec<usize>,
}

impl PermutationGroup {
    /// Verifies closure and builds the product table. The identity is moved
    /// to index 0 if it is present elsewhere.
    pub fn from_permutations(perms: Vec<Permutation>) -> Result<Self> {
        let tags = (0..perms.len()).map(|i| format!("g{i}")).collect();
        Self::with_tags(perms, tags)
    }

    pub fn with_tags(mut perms: Vec<Permutation>, mut tags: Vec<String>) -> Result<Self> {
        if perms.len() != tags.len() {
            return Err(Error::InvalidArgument("one tag per element required".into()));
        }
        let n = perms.first().map(|p| p.len()).ok_or_else(|| Error::NotAGroup("empty set".into()))?;
        if perms.iter().any(|p| p.len() != n) {
            return Err(Error::NotAGroup("permutations act on different numbers of sites".into()));
        }
        let id = perms
            .iter()
            .position(|p| p.is_identity())
            .ok_or_else(|| Error::NotAGroup("identity missing".into()))?;
        if id != 0 {
            let p = perms.remove(id);
            perms.insert(0, p);
            let t = tags.remove(id);
            tags.insert(0, t);
        }
        let mut lookup = HashMap::with_capacity(perms.len());
        for (i, p) in perms.iter().enumerate() {
            if lookup.insert(p.clone(), i).is_some() {
                return Err(Error::NotAGroup(format!("duplicate element {:?}", p.image())));
            }
        }
        let m = perms.len();
        let mut table = vec![0; m * m];
        for i in 0..m {
            for j in 0..m {
                let prod = perms[i].compose(&perms[j]);
                table[i * m + j] = *lookup.get(&prod).ok_or(Error::ClosureViolation(i, j))?;
            }
        }
        let inverse = (0..m).map(|i| (0..m).find(|&j| table[i * m + j] == 0).unwrap()).collect();
        Ok(PermutationGroup { elements: perms, tags, table, inverse })
    }

    pub fn trivial(n_sites: usize) -> Self {
        PermutationGroup {
            elements: vec![Permutation::identity(n_sites)],
            tags: vec!["Id()".into()],
            table: vec![0],
            inverse: vec![0],
        }
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn n_sites(&self) -> usize {
        self.elements[0].len()
    }

    pub fn elements(&self) -> &[Permutation] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &Permutation {
        &self.elements[i]
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    /// Index of `g∘h`.
    pub fn product(&self, g: usize, h: usize) -> usize {
        self.table[g * self.order() + h]
    }

    pub fn inverse(&self, g: usize) -> usize {
        self.inverse[g]
    }

    pub fn is_abelian(&self) -> bool {
        let m = self.order();
        (0..m).all(|i| (0..m).all(|j| self.product(i, j) == self.product(j, i)))
    }

    /// Conjugacy classes ordered by their smallest element index.
    pub fn conjugacy_classes(&self) -> Vec<Vec<usize>> {
        let m = self.order();
        let mut class_of = vec![usize::MAX; m];
        let mut classes = Vec::new();
        for g in 0..m {
            if class_of[g] != usize::MAX {
                continue;
            }
            let mut members = Vec::new();
            for h in 0..m {
                let c = self.product(self.product(h, g), self.inverse(h));
                if class_of[c] == usize::MAX {
                    class_of[c] = classes.len();
                    members.push(c);
                }
            }
            members.sort_unstable();
            classes.push(members);
        }
        classes
    }

    /// Irreducible characters by the class-algebra eigenvector method.
    pub fn character_table(&self) -> Result<CharacterTable> {
        let m = self.order();
        if m > CHARACTER_TABLE_CAP {
            return Err(Error::CapExceeded { what: "group order", value: m, limit: CHARACTER_TABLE_CAP });
        }
        let classes = self.conjugacy_classes();
        let r = classes.len();
        let mut class_of = vec![0; m];
        for (k, c) in classes.iter().enumerate() {
            for &g in c {
                class_of[g] = k;
            }
        }
        // c[a][b][t] = #{x ∈ K_a : x⁻¹ z_t ∈ K_b} for a fixed z_t ∈ K_t
        let mut coef = vec![0.0; r * r * r];
        for (t, ct) in classes.iter().enumerate() {
            let z = ct[0];
            for (a, ca) in classes.iter().enumerate() {
                for &x in ca {
                    let y = self.product(self.inverse(x), z);
                    coef[(a * r + class_of[y]) * r + t] += 1.0;
                }
            }
        }
        let sizes: Vec<f64> = classes.iter().map(|c| c.len() as f64).collect();
        // N_a = D^{-1/2} M_a D^{1/2} with (M_a)[b][t] = c[a][b][t] are commuting normal matrices
        let normal: Vec<DMatrix<C64>> = (0..r)
            .map(|a| {
                DMatrix::from_fn(r, r, |b, t| {
                    C64::new(coef[(a * r + b) * r + t] * (sizes[t] / sizes[b]).sqrt(), 0.0)
                })
            })
            .collect();

        let mut blocks: Vec<DMatrix<C64>> = vec![DMatrix::identity(r, r)];
        for n in &normal {
            let herm = (n + n.adjoint()) * C64::new(0.5, 0.0);
            let anti = (n - n.adjoint()) * C64::new(0.0, -0.5);
            for h in [herm, anti] {
                blocks = blocks.into_iter().flat_map(|q| split_block(&q, &h)).collect();
            }
            if blocks.len() == r {
                break;
            }
        }
        if blocks.len() != r {
            return Err(Error::Factorization(format!(
                "class sums separated only {} of {r} irreps",
                blocks.len()
            )));
        }
        let mut chars: Vec<Vec<C64>> = blocks
            .iter()
            .map(|q| {
                let omega: Vec<C64> = (0..r).map(|t| q[(t, 0)] * sizes[t].sqrt()).collect();
                let w0 = omega[0];
                let omega: Vec<C64> = omega.iter().map(|w| w / w0).collect();
                let norm: f64 = omega.iter().zip(&sizes).map(|(w, s)| w.norm_sqr() / s).sum();
                let d = (m as f64 / norm).sqrt().round();
                omega.iter().zip(&sizes).map(|(w, s)| w * d / s).collect()
            })
            .collect();
        chars.sort_by(|a, b| {
            a[0].re
                .partial_cmp(&b[0].re)
                .unwrap()
                .then_with(|| lex_desc(a, b))
        });
        let class_tags = classes.iter().map(|c| format!("{}x{}", c.len(), self.tags[c[0]])).collect();
        Ok(CharacterTable { group_order: m, classes, class_tags, chars })
    }

    /// The subgroup formed by the listed elements, keeping their tags.
    pub fn subgroup(&self, indices: &[usize]) -> Result<PermutationGroup> {
        Self::with_tags(
            indices.iter().map(|&i| self.elements[i].clone()).collect(),
            indices.iter().map(|&i| self.tags[i].clone()).collect(),
        )
    }
}

fn cmp_tol(a: f64, b: f64) -> Ordering {
    if (a - b).abs() < 1e-8 {
        Ordering::Equal
    } else if a < b {
        Ordering::Less
    } else {
        Ordering::Greater
    }
}

// descending lexicographic order on (re, im) pairs
fn lex_desc(a: &[C64], b: &[C64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = cmp_tol(y.re, x.re).then(cmp_tol(y.im, x.im));
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

// Splits the span of the columns of q into eigenspaces of q† h q.
fn split_block(q: &DMatrix<C64>, h: &DMatrix<C64>) -> Vec<DMatrix<C64>> {
    if q.ncols() == 1 {
        return vec![q.clone()];
    }
    let proj = q.adjoint() * h * q;
    let proj = (&proj + proj.adjoint()) * C64::new(0.5, 0.0);
    let eig = proj.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some(g) if (eig.eigenvalues[i] - eig.eigenvalues[*g.last().unwrap()]).abs() < EIG_TOL => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
        .into_iter()
        .map(|g| {
            let sub = DMatrix::from_fn(q.ncols(), g.len(), |row, c| eig.eigenvectors[(row, g[c])]);
            q * sub
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct CharacterTable {
    group_order: usize,
    classes: Vec<Vec<usize>>,
    class_tags: Vec<String>,
    chars: Vec<Vec<C64>>,
}

impl CharacterTable {
    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn class_tags(&self) -> &[String] {
        &self.class_tags
    }

    /// Irrep-by-class characters.
    pub fn characters(&self) -> &[Vec<C64>] {
        &self.chars
    }

    pub fn n_irreps(&self) -> usize {
        self.chars.len()
    }

    pub fn dimensions(&self) -> Vec<usize> {
        self.chars.iter().map(|c| c[0].re.round() as usize).collect()
    }

    /// Characters of irrep `k` on every group element.
    pub fn element_characters(&self, k: usize) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.group_order];
        for (c, members) in self.classes.iter().enumerate() {
            for &g in members {
                out[g] = self.chars[k][c];
            }
        }
        out
    }

    /// Largest deviation from row and column orthogonality.
    pub fn orthogonality_error(&self) -> f64 {
        let g = self.group_order as f64;
        let r = self.chars.len();
        let mut err: f64 = 0.0;
        for a in 0..r {
            for b in 0..r {
                let s: C64 = (0..r)
                    .map(|c| self.chars[a][c] * self.chars[b][c].conj() * self.classes[c].len() as f64)
                    .sum();
                let expect = if a == b { g } else { 0.0 };
                err = err.max((s - expect).norm());
            }
        }
        for c1 in 0..r {
            for c2 in 0..r {
                let s: C64 = (0..r).map(|a| self.chars[a][c1] * self.chars[a][c2].conj()).sum();
                let expect = if c1 == c2 { g / self.classes[c1].len() as f64 } else { 0.0 };
                err = err.max((s - expect).norm());
            }
        }
        err
    }

    /// Class header followed by the character matrix, one irrep per line.
    pub fn readable(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = self.class_tags.iter().map(|t| format!("'{t}'")).collect();
        let _ = writeln!(out, "[{}]", header.join(", "));
        for row in &self.chars {
            let cells: Vec<String> = row.iter().map(|&c| format_complex(c)).collect();
            let _ = writeln!(out, "[{}]", cells.join(", "));
        }
        out
    }
}

fn snap(x: f64) -> f64 {
    for den in [1.0, 2.0, 3.0, 4.0, 6.0] {
        let v = (x * den).round() / den;
        if (x - v).abs() < 1e-8 {
            return if v == 0.0 { 0.0 } else { v };
        }
    }
    x
}

fn format_real(x: f64) -> String {
    let x = snap(x);
    if x.fract() == 0.0 {
        format!("{x:.0}")
    } else {
        format!("{x:.4}")
    }
}

fn format_complex(c: C64) -> String {
    let im = snap(c.im);
    if im == 0.0 {
        format!("{:>3}", format_real(c.re))
    } else {
        let sign = if im < 0.0 { '-' } else { '+' };
        format!("{}{sign}{}i", format_real(c.re), format_real(im.abs()))
    }
}

/// An orthogonal map `x ↦ R x + τ` with a readable tag.
#[derive(Clone, Debug)]
pub struct PointGroupElement {
    dim: usize,
    matrix: Vec<f64>,
    translation: Vec<f64>,
    tag: String,
}

fn angle_tag(deg: f64) -> String {
    let r = (deg * 1e6).round() / 1e6 + 0.0;
    if r.fract() == 0.0 {
        format!("{r:.0}")
    } else {
        format!("{r}")
    }
}

impl PointGroupElement {
    pub fn new(dim: usize, matrix: Vec<f64>, translation: Vec<f64>, tag: impl Into<String>) -> Result<Self> {
        if matrix.len() != dim * dim || translation.len() != dim {
            return Err(Error::ShapeMismatch("point group element has wrong shape".into()));
        }
        let m = DMatrix::from_row_slice(dim, dim, &matrix);
        let err = (m.transpose() * &m - DMatrix::identity(dim, dim)).abs().max();
        if err > 1e-12 {
            return Err(Error::InvalidArgument(format!("matrix is not orthogonal (error {err:e})")));
        }
        Ok(PointGroupElement { dim, matrix, translation, tag: tag.into() })
    }

    pub fn identity(dim: usize) -> Self {
        let m = DMatrix::<f64>::identity(dim, dim);
        PointGroupElement { dim, matrix: m.transpose().as_slice().to_vec(), translation: vec![0.0; dim], tag: "Id()".into() }
    }

    pub fn inversion(dim: usize) -> Self {
        let m = -DMatrix::<f64>::identity(dim, dim);
        PointGroupElement { dim, matrix: m.transpose().as_slice().to_vec(), translation: vec![0.0; dim], tag: "Inv()".into() }
    }

    /// Counter-clockwise rotation by `deg` degrees in the plane.
    pub fn rotation(deg: f64) -> Self {
        let t = deg.to_radians();
        let (s, c) = t.sin_cos();
        let tag = if deg.rem_euclid(360.0) == 0.0 { "Id()".to_string() } else { format!("Rot({})", angle_tag(deg)) };
        PointGroupElement { dim: 2, matrix: vec![c, -s, s, c], translation: vec![0.0; 2], tag }
    }

    /// Mirror across the line through the origin at angle `deg` to the x axis.
    pub fn reflection(deg: f64) -> Self {
        let t = 2.0 * deg.to_radians();
        let (s, c) = t.sin_cos();
        PointGroupElement {
            dim: 2,
            matrix: vec![c, s, s, -c],
            translation: vec![0.0; 2],
            tag: format!("Refl({})", angle_tag(deg)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn translation(&self) -> &[f64] {
        &self.translation
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d).map(|i| (0..d).map(|j| self.matrix[i * d + j] * x[j]).sum::<f64>() + self.translation[i]).collect()
    }

    /// The linear part applied to a wave vector.
    pub fn rotate(&self, k: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d).map(|i| (0..d).map(|j| self.matrix[i * d + j] * k[j]).sum()).collect()
    }
}

#[derive(Clone, Debug)]
pub struct PointGroup {
    dim: usize,
    elements: Vec<PointGroupElement>,
}

impl PointGroup {
    pub fn new(elements: Vec<PointGroupElement>) -> Result<Self> {
        let dim = elements.first().map(|e| e.dim).ok_or_else(|| Error::NotAGroup("empty point group".into()))?;
        if elements.iter().any(|e| e.dim != dim) {
            return Err(Error::InvalidArgument("mixed dimensions in point group".into()));
        }
        let id = PointGroupElement::identity(dim);
        let e0 = &elements[0];
        if e0.matrix.iter().zip(&id.matrix).any(|(a, b)| (a - b).abs() > 1e-12) || e0.translation.iter().any(|t| t.abs() > 1e-12) {
            return Err(Error::NotAGroup("first point group element must be the identity".into()));
        }
        Ok(PointGroup { dim, elements })
    }

    pub fn trivial(dim: usize) -> Self {
        PointGroup { dim, elements: vec![PointGroupElement::identity(dim)] }
    }

    /// Rotations by multiples of 360°/n.
    pub fn cyclic(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("cyclic group needs n ≥ 1".into()));
        }
        Self::new((0..n).map(|k| PointGroupElement::rotation(360.0 * k as f64 / n as f64)).collect())
    }

    /// The n rotations followed by the n mirrors `Refl(0)∘Rot(360k/n)`.
    pub fn dihedral(n: usize) -> Result<Self> {
        let mut elements: Vec<PointGroupElement> = Self::cyclic(n)?.elements;
        for k in 0..n {
            elements.push(PointGroupElement::reflection(-180.0 * k as f64 / n as f64));
        }
        Self::new(elements)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[PointGroupElement] {
        &self.elements
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }
}

/// Space group of a periodic lattice: elements `t∘p` with `p` from the point
/// group and `t` a lattice translation, indexed `p·|T| + t`.
#[derive(Clone, Debug)]
pub struct SpaceGroup {
    lattice: Lattice,
    point_group: PointGroup,
    point_perms: PermutationGroup,
    translations: Vec<Vec<usize>>,
    group: PermutationGroup,
}

impl SpaceGroup {
    /// Uses the lattice's default point group when `point_group` is `None`.
    pub fn new(lattice: &Lattice, point_group: Option<&PointGroup>) -> Result<Self> {
        let pg = match point_group {
            Some(pg) => pg.clone(),
            None => lattice.point_group().cloned().unwrap_or_else(|| PointGroup::trivial(lattice.ndim())),
        };
        let pperms = pg.elements().iter().map(|e| lattice.point_permutation(e)).collect::<Result<Vec<_>>>()?;
        let ptags = pg.elements().iter().map(|e| e.tag().to_string()).collect();
        let point_perms = PermutationGroup::with_tags(pperms.clone(), ptags)?;
        let translations = lattice.translation_vectors();
        let tperms = translations.iter().map(|t| lattice.translation_permutation(t)).collect::<Result<Vec<_>>>()?;
        let mut elements = Vec::with_capacity(pperms.len() * tperms.len());
        let mut tags = Vec::with_capacity(elements.capacity());
        for (p, e) in pperms.iter().zip(pg.elements()) {
            for (t, tv) in tperms.iter().zip(&translations) {
                elements.push(t.compose(p));
                tags.push(format!("T{tv:?}∘{}", e.tag()));
            }
        }
        let group = PermutationGroup::with_tags(elements, tags)?;
        Ok(SpaceGroup { lattice: lattice.clone(), point_group: pg, point_perms, translations, group })
    }

    pub fn group(&self) -> &PermutationGroup {
        &self.group
    }

    pub fn order(&self) -> usize {
        self.group.order()
    }

    pub fn point_group(&self) -> &PointGroup {
        &self.point_group
    }

    fn is_symmorphic(&self) -> bool {
        self.point_group.elements().iter().all(|e| {
            let f = self.lattice.fractional(e.translation());
            f.iter().all(|v| (v - v.round()).abs() < 1e-8)
        })
    }

    // k' − k is a reciprocal lattice vector
    fn equivalent(&self, k1: &[f64], k2: &[f64]) -> bool {
        self.lattice.basis().iter().all(|a| {
            let x: f64 = a.iter().zip(k1.iter().zip(k2)).map(|(ai, (p, q))| ai * (p - q)).sum::<f64>() / (2.0 * PI);
            (x - x.round()).abs() < 1e-8
        })
    }

    /// Checks that `k` is compatible with the periodic extent.
    pub fn check_momentum(&self, k: &[f64]) -> Result<()> {
        if k.len() != self.lattice.ndim() {
            return Err(Error::InvalidArgument("momentum dimension differs from lattice".into()));
        }
        for (a, &l) in self.lattice.basis().iter().zip(self.lattice.extent()) {
            let x: f64 = a.iter().zip(k).map(|(ai, ki)| ai * ki).sum::<f64>() * l as f64 / (2.0 * PI);
            if (x - x.round()).abs() > 1e-8 {
                return Err(Error::InvalidArgument(format!("momentum {k:?} is not allowed on this lattice")));
            }
        }
        Ok(())
    }

    /// Point-group elements leaving `k` invariant modulo reciprocal vectors.
    pub fn little_group_indices(&self, k: &[f64]) -> Result<Vec<usize>> {
        self.check_momentum(k)?;
        Ok((0..self.point_group.order())
            .filter(|&p| self.equivalent(&self.point_group.elements()[p].rotate(k), k))
            .collect())
    }

    /// The little group of `k` as a group of node permutations tagged with
    /// point-group names.
    pub fn little_group(&self, k: &[f64]) -> Result<PermutationGroup> {
        let idx = self.little_group_indices(k)?;
        self.point_perms.subgroup(&idx)
    }

    /// Characters over the whole space group of the irrep induced from the
    /// `irrep`-th little-group irrep at `k`:
    /// `χ(t∘p) = Σ_{k' ∈ star, p k' ≡ k'} e^{−i k'·t} χ_k(q⁻¹ p q)`.
    pub fn irrep_characters(&self, k: &[f64], irrep: usize) -> Result<Vec<C64>> {
        let little_idx = self.little_group_indices(k)?;
        let is_zero = k.iter().all(|v| v.abs() < 1e-12);
        if !self.is_symmorphic() && !is_zero {
            return Err(Error::Unsupported("irreps away from Γ of a nonsymmorphic space group".into()));
        }
        let little = self.point_perms.subgroup(&little_idx)?;
        let table = little.character_table()?;
        if irrep >= table.n_irreps() {
            return Err(Error::InvalidArgument(format!(
                "little group has {} irreps, asked for {irrep}",
                table.n_irreps()
            )));
        }
        let little_chars = table.element_characters(irrep);
        // little group element index in the point-group numbering → local index
        let mut local = vec![usize::MAX; self.point_group.order()];
        for (li, &p) in little_idx.iter().enumerate() {
            local[p] = li;
        }
        // star representatives: (k', q) with q k ≡ k'
        let pts = self.point_group.elements();
        let mut star: Vec<(Vec<f64>, usize)> = Vec::new();
        for (q, e) in pts.iter().enumerate() {
            let kq = e.rotate(k);
            if !star.iter().any(|(ks, _)| self.equivalent(ks, &kq)) {
                star.push((kq, q));
            }
        }
        let n_t = self.translations.len();
        let mut chi = vec![C64::new(0.0, 0.0); self.order()];
        for p in 0..self.point_group.order() {
            let mut phase_sum: Vec<C64> = vec![C64::new(0.0, 0.0); n_t];
            for (kq, q) in &star {
                if !self.equivalent(&pts[p].rotate(kq), kq) {
                    continue;
                }
                let qi = self.point_perms.inverse(*q);
                let conj = self.point_perms.product(qi, self.point_perms.product(p, *q));
                let c = little_chars[local[conj]];
                for (ti, t) in self.translations.iter().enumerate() {
                    let tf: Vec<f64> = t.iter().map(|&v| v as f64).collect();
                    let tc = self.lattice.cartesian(&tf);
                    let dot: f64 = kq.iter().zip(&tc).map(|(a, b)| a * b).sum();
                    phase_sum[ti] += c * C64::from_polar(1.0, -dot);
                }
            }
            for ti in 0..n_t {
                chi[p * n_t + ti] = phase_sum[ti];
            }
        }
        Ok(chi)
    }
}
