//! Computational bases.
//!
//! A [`DiscreteHilbert`] lists the allowed local quantum numbers of every site
//! and an optional set of sum constraints (fixed magnetization, fixed
//! population per block of sites). Configurations are stored as `f64`
//! quantum numbers regardless of kind.
//!
//! Basis order is mixed-radix with site 0 most significant and local states
//! in declared order. Constrained spaces keep the induced subsequence.

use std::sync::{Arc, OnceLock};

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::batch::Batch;
use crate::error::{Error, Result};
use crate::rng::RngKey;

/// Largest number of basis states we are willing to enumerate into memory.
pub const MAX_ENUMERATION: usize = 1 << 24;

const REJECTION_CAP: usize = 1_000_000;
const VALUE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum HilbertKind {
    Spin { s: f64 },
    Qubit,
    Fock { n_max: usize },
    SpinOrbitalFermions { n_orbitals: usize, n_sectors: usize },
    Product,
}

/// The sum of the quantum numbers on sites `start..end` must equal `total`.
#[derive(Clone, Debug, PartialEq)]
pub struct SumConstraint {
    pub start: usize,
    pub end: usize,
    pub total: f64,
}

#[derive(Debug)]
pub struct DiscreteHilbert {
    local_states: Vec<Vec<f64>>,
    constraints: Vec<SumConstraint>,
    kind: HilbertKind,
    // full (unconstrained) mixed-radix indices of the allowed states, ascending
    allowed: OnceLock<Option<Vec<u64>>>,
}

impl Clone for DiscreteHilbert {
    fn clone(&self) -> Self {
        DiscreteHilbert {
            local_states: self.local_states.clone(),
            constraints: self.constraints.clone(),
            kind: self.kind.clone(),
            allowed: OnceLock::new(),
        }
    }
}

impl PartialEq for DiscreteHilbert {
    fn eq(&self, other: &Self) -> bool {
        self.local_states == other.local_states && self.constraints == other.constraints
    }
}

fn spin_values(s: f64) -> Result<Vec<f64>> {
    let two_s = 2.0 * s;
    if s <= 0.0 || (two_s - two_s.round()).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("spin must be a positive half-integer, got {s}")));
    }
    let two_s = two_s.round() as i64;
    Ok((0..=two_s).map(|k| (-two_s + 2 * k) as f64).collect())
}

impl DiscreteHilbert {
    /// General constructor from explicit per-site local states.
    pub fn from_local_states(local_states: Vec<Vec<f64>>, constraints: Vec<SumConstraint>) -> Result<Self> {
        Self::build(local_states, constraints, HilbertKind::Product)
    }

    fn build(local_states: Vec<Vec<f64>>, mut constraints: Vec<SumConstraint>, kind: HilbertKind) -> Result<Self> {
        for (i, ls) in local_states.iter().enumerate() {
            if ls.is_empty() {
                return Err(Error::InvalidArgument(format!("site {i} has no local states")));
            }
            if ls.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::InvalidArgument(format!(
                    "local states of site {i} must be strictly increasing"
                )));
            }
        }
        constraints.sort_by_key(|c| c.start);
        let n = local_states.len();
        let mut last_end = 0;
        for c in &constraints {
            if c.start >= c.end || c.end > n || c.start < last_end {
                return Err(Error::InvalidArgument(format!(
                    "constraint ranges must be disjoint and within 0..{n}: {c:?}"
                )));
            }
            last_end = c.end;
        }
        Ok(DiscreteHilbert { local_states, constraints, kind, allowed: OnceLock::new() })
    }

    /// `n` spins of magnitude `s`; quantum numbers are 2·S^z (±1 for s = 1/2).
    pub fn spin(s: f64, n: usize) -> Result<Self> {
        let vals = spin_values(s)?;
        Self::build(vec![vals; n], vec![], HilbertKind::Spin { s })
    }

    /// Spins restricted to total S^z = `total_sz` (in units of ħ).
    pub fn spin_with_total_sz(s: f64, n: usize, total_sz: f64) -> Result<Self> {
        let vals = spin_values(s)?;
        let c = SumConstraint { start: 0, end: n, total: 2.0 * total_sz };
        let h = Self::build(vec![vals; n], vec![c], HilbertKind::Spin { s })?;
        h.check_feasible()?;
        Ok(h)
    }

    pub fn qubit(n: usize) -> Result<Self> {
        Self::build(vec![vec![0.0, 1.0]; n], vec![], HilbertKind::Qubit)
    }

    /// Bosonic occupations `0..=n_max` on `n` sites.
    pub fn fock(n_max: usize, n: usize) -> Result<Self> {
        let vals: Vec<f64> = (0..=n_max).map(|k| k as f64).collect();
        Self::build(vec![vals; n], vec![], HilbertKind::Fock { n_max })
    }

    pub fn fock_with_population(n_max: usize, n: usize, n_particles: usize) -> Result<Self> {
        let vals: Vec<f64> = (0..=n_max).map(|k| k as f64).collect();
        let c = SumConstraint { start: 0, end: n, total: n_particles as f64 };
        let h = Self::build(vec![vals; n], vec![c], HilbertKind::Fock { n_max })?;
        h.check_feasible()?;
        Ok(h)
    }

    /// Spin-`s` fermions on `n_orbitals` orbitals, as one occupation-number
    /// block per spin sector. Sectors are ordered from S^z = +s downwards, so
    /// for s = 1/2 the layout is n_{0↑} … n_{N−1,↑}, n_{0↓} … n_{N−1,↓}.
    /// `n_fermions` fixes the population of each sector when given.
    pub fn spin_orbital_fermions(n_orbitals: usize, s: f64, n_fermions: Option<&[usize]>) -> Result<Self> {
        let n_sectors = spin_values(s).map(|v| v.len()).or_else(|_| {
            if s == 0.0 {
                Ok(1)
            } else {
                Err(Error::InvalidArgument(format!("invalid fermion spin {s}")))
            }
        })?;
        let n = n_orbitals * n_sectors;
        let mut constraints = Vec::new();
        if let Some(nf) = n_fermions {
            if nf.len() != n_sectors {
                return Err(Error::InvalidArgument(format!(
                    "expected {n_sectors} sector populations, got {}",
                    nf.len()
                )));
            }
            for (k, &m) in nf.iter().enumerate() {
                constraints.push(SumConstraint {
                    start: k * n_orbitals,
                    end: (k + 1) * n_orbitals,
                    total: m as f64,
                });
            }
        }
        let h = Self::build(
            vec![vec![0.0, 1.0]; n],
            constraints,
            HilbertKind::SpinOrbitalFermions { n_orbitals, n_sectors },
        )?;
        h.check_feasible()?;
        Ok(h)
    }

    /// Orbital index of (`orbital`, `sz`) in the occupation-number layout.
    pub fn fermion_orbital_index(&self, orbital: usize, sz: f64) -> Result<usize> {
        match self.kind {
            HilbertKind::SpinOrbitalFermions { n_orbitals, n_sectors } => {
                let s = (n_sectors as f64 - 1.0) / 2.0;
                let sector = (s - sz).round();
                if orbital >= n_orbitals || sector < 0.0 || sector as usize >= n_sectors || (s - sz - sector).abs() > 1e-9 {
                    return Err(Error::InvalidArgument(format!("no orbital ({orbital}, sz={sz})")));
                }
                Ok(sector as usize * n_orbitals + orbital)
            }
            _ => Err(Error::Unsupported("orbital lookup needs a spin-orbital fermion space".into())),
        }
    }

    fn check_feasible(&self) -> Result<()> {
        for c in &self.constraints {
            // reachable block sums, built site by site
            let mut sums = vec![0.0];
            for ls in &self.local_states[c.start..c.end] {
                let mut next: Vec<f64> = sums.iter().flat_map(|s| ls.iter().map(move |v| s + v)).collect();
                next.sort_by(|a, b| a.partial_cmp(b).unwrap());
                next.dedup_by(|a, b| (*a - *b).abs() < VALUE_TOL);
                sums = next;
            }
            if !sums.iter().any(|s| (s - c.total).abs() < VALUE_TOL) {
                return Err(Error::InvalidArgument(format!("constraint total {} is unreachable", c.total)));
            }
        }
        Ok(())
    }

    /// `self ⊗ other`. Sum constraints of both factors are kept on their own
    /// site blocks.
    pub fn tensor_product(&self, other: &DiscreteHilbert) -> Result<DiscreteHilbert> {
        let shift = self.size();
        let mut local = self.local_states.clone();
        local.extend(other.local_states.iter().cloned());
        let mut cons = self.constraints.clone();
        cons.extend(other.constraints.iter().map(|c| SumConstraint {
            start: c.start + shift,
            end: c.end + shift,
            total: c.total,
        }));
        let kind = if self.size() == 0 {
            other.kind.clone()
        } else if other.size() == 0 {
            self.kind.clone()
        } else {
            HilbertKind::Product
        };
        Self::build(local, cons, kind)
    }

    /// `self^k`. A constrained space has no unambiguous power for k > 1.
    pub fn power(&self, k: usize) -> Result<DiscreteHilbert> {
        if !self.constraints.is_empty() && k > 1 {
            return Err(Error::InvalidArgument(
                "cannot compose a constrained space with itself; build the constraint on the full space".into(),
            ));
        }
        let mut local = Vec::with_capacity(self.size() * k);
        for _ in 0..k {
            local.extend(self.local_states.iter().cloned());
        }
        let cons = if k == 1 { self.constraints.clone() } else { vec![] };
        let kind = if k == 0 { HilbertKind::Product } else { self.kind.clone() };
        Self::build(local, cons, kind)
    }

    pub fn size(&self) -> usize {
        self.local_states.len()
    }

    pub fn kind(&self) -> &HilbertKind {
        &self.kind
    }

    pub fn local_states(&self, site: usize) -> &[f64] {
        &self.local_states[site]
    }

    pub fn local_dim(&self, site: usize) -> usize {
        self.local_states[site].len()
    }

    pub fn constraints(&self) -> &[SumConstraint] {
        &self.constraints
    }

    pub fn is_constrained(&self) -> bool {
        !self.constraints.is_empty()
    }

    /// Index of `value` among the local states of `site`.
    pub fn local_index(&self, site: usize, value: f64) -> Option<usize> {
        self.local_states[site].iter().position(|&v| (v - value).abs() < VALUE_TOL)
    }

    /// Number of states of the unconstrained product space, if it fits in u64.
    fn full_size(&self) -> Option<u64> {
        self.local_states.iter().try_fold(1u64, |acc, l| acc.checked_mul(l.len() as u64))
    }

    fn allowed(&self) -> Option<&Vec<u64>> {
        self.allowed.get_or_init(|| self.enumerate_constrained()).as_ref()
    }

    // depth-first walk in mixed-radix order with pruning on the block sums
    fn enumerate_constrained(&self) -> Option<Vec<u64>> {
        let n = self.size();
        self.full_size()?;
        let mut block_of = vec![usize::MAX; n];
        for (k, c) in self.constraints.iter().enumerate() {
            for b in block_of.iter_mut().take(c.end).skip(c.start) {
                *b = k;
            }
        }
        // remaining min/max achievable sums for sites i.. within their block
        let mut rem_min = vec![0.0; n + 1];
        let mut rem_max = vec![0.0; n + 1];
        for i in (0..n).rev() {
            let same_block = i + 1 < n && block_of[i + 1] == block_of[i];
            let (nmin, nmax) = if same_block { (rem_min[i + 1], rem_max[i + 1]) } else { (0.0, 0.0) };
            rem_min[i] = nmin + self.local_states[i][0];
            rem_max[i] = nmax + *self.local_states[i].last().unwrap();
        }
        let radix: Vec<u64> = self.local_states.iter().map(|l| l.len() as u64).collect();
        let mut out = Vec::new();
        let mut choice = vec![0usize; n];
        let mut partial = vec![0.0; n + 1];
        let mut index_prefix = vec![0u64; n + 1];
        let mut site = 0usize;
        if n == 0 {
            return Some(vec![0]);
        }
        loop {
            if site == n {
                out.push(index_prefix[n]);
                if out.len() > MAX_ENUMERATION {
                    return None;
                }
                site -= 1;
                choice[site] += 1;
                continue;
            }
            if choice[site] >= radix[site] as usize {
                choice[site] = 0;
                if site == 0 {
                    break;
                }
                site -= 1;
                choice[site] += 1;
                continue;
            }
            let v = self.local_states[site][choice[site]];
            let blk = block_of[site];
            let start_of_block = site == 0 || block_of[site - 1] != blk;
            let base = if blk == usize::MAX || start_of_block { 0.0 } else { partial[site] };
            let sum = base + v;
            let mut ok = true;
            if blk != usize::MAX {
                let target = self.constraints[blk].total;
                let end_of_block = site + 1 == n || block_of[site + 1] != blk;
                if end_of_block {
                    ok = (sum - target).abs() < VALUE_TOL;
                } else {
                    let need = target - sum;
                    ok = need >= rem_min[site + 1] - VALUE_TOL && need <= rem_max[site + 1] + VALUE_TOL;
                }
            }
            if !ok {
                choice[site] += 1;
                continue;
            }
            partial[site + 1] = sum;
            index_prefix[site + 1] = index_prefix[site] * radix[site] + choice[site] as u64;
            site += 1;
            if site < n {
                choice[site] = 0;
            }
        }
        Some(out)
    }

    /// Number of basis states satisfying the constraints.
    pub fn n_states(&self) -> Result<usize> {
        if self.constraints.is_empty() {
            self.full_size()
                .and_then(|v| usize::try_from(v).ok())
                .ok_or_else(|| Error::NotEnumerable("basis size overflows 64 bits".into()))
        } else {
            self.allowed()
                .map(|a| a.len())
                .ok_or_else(|| Error::NotEnumerable(format!("more than {MAX_ENUMERATION} constrained states")))
        }
    }

    fn decode_full(&self, mut idx: u64, out: &mut [f64]) {
        for site in (0..self.size()).rev() {
            let d = self.local_states[site].len() as u64;
            out[site] = self.local_states[site][(idx % d) as usize];
            idx /= d;
        }
    }

    pub fn index_to_config(&self, i: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.size()];
        self.index_to_config_into(i, &mut out)?;
        Ok(out)
    }

    pub fn index_to_config_into(&self, i: usize, out: &mut [f64]) -> Result<()> {
        let n_states = self.n_states()?;
        if i >= n_states {
            return Err(Error::IndexOutOfRange { index: i, n_states });
        }
        let full = if self.constraints.is_empty() { i as u64 } else { self.allowed().unwrap()[i] };
        self.decode_full(full, out);
        Ok(())
    }

    /// Checks that every entry is an allowed local state.
    pub fn check_values(&self, s: &[f64]) -> Result<()> {
        if s.len() != self.size() {
            return Err(Error::InvalidConfig(format!("expected {} entries, got {}", self.size(), s.len())));
        }
        for (site, &v) in s.iter().enumerate() {
            if self.local_index(site, v).is_none() {
                return Err(Error::InvalidConfig(format!("value {v} not allowed on site {site}")));
            }
        }
        Ok(())
    }

    pub fn satisfies_constraints(&self, s: &[f64]) -> bool {
        self.constraints
            .iter()
            .all(|c| (s[c.start..c.end].iter().sum::<f64>() - c.total).abs() < VALUE_TOL)
    }

    /// Full membership check: values and constraints.
    pub fn contains(&self, s: &[f64]) -> bool {
        self.check_values(s).is_ok() && self.satisfies_constraints(s)
    }

    pub fn config_to_index(&self, s: &[f64]) -> Result<usize> {
        self.check_values(s)?;
        if !self.satisfies_constraints(s) {
            return Err(Error::ConstraintViolation(format!("{s:?}")));
        }
        let mut full: u64 = 0;
        for (site, &v) in s.iter().enumerate() {
            let d = self.local_states[site].len() as u64;
            let li = self.local_index(site, v).unwrap() as u64;
            full = full
                .checked_mul(d)
                .and_then(|x| x.checked_add(li))
                .ok_or_else(|| Error::NotEnumerable("basis size overflows 64 bits".into()))?;
        }
        if self.constraints.is_empty() {
            return usize::try_from(full).map_err(|_| Error::NotEnumerable("index overflows usize".into()));
        }
        let allowed = self
            .allowed()
            .ok_or_else(|| Error::NotEnumerable(format!("more than {MAX_ENUMERATION} constrained states")))?;
        allowed
            .binary_search(&full)
            .map_err(|_| Error::ConstraintViolation(format!("{s:?}")))
    }

    /// Every basis state in enumeration order.
    pub fn all_states(&self) -> Result<Batch> {
        let n = self.n_states()?;
        let mut b = Batch::with_capacity(self.size(), n);
        let mut row = vec![0.0; self.size()];
        for i in 0..n {
            self.index_to_config_into(i, &mut row)?;
            b.push(&row)?;
        }
        Ok(b)
    }

    /// `n` random basis states, uniform within each constrained block.
    pub fn random_state(&self, key: RngKey, n: usize) -> Result<Batch> {
        let mut rng = key.rng();
        let mut b = Batch::with_capacity(self.size(), n);
        let mut row = vec![0.0; self.size()];
        for _ in 0..n {
            self.random_state_into(&mut rng, &mut row)?;
            b.push(&row)?;
        }
        Ok(b)
    }

    pub fn random_state_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) -> Result<()> {
        for (site, o) in out.iter_mut().enumerate() {
            let ls = &self.local_states[site];
            *o = ls[rng.random_range(0..ls.len())];
        }
        for c in &self.constraints {
            self.random_block(rng, c, &mut out[c.start..c.end])?;
        }
        Ok(())
    }

    fn random_block<R: Rng + ?Sized>(&self, rng: &mut R, c: &SumConstraint, out: &mut [f64]) -> Result<()> {
        let block = &self.local_states[c.start..c.end];
        let len = block.len();
        let uniform_two_level = block.iter().all(|l| l.len() == 2 && *l == block[0]);
        if uniform_two_level {
            // fixed multiset of the two values: place the upper ones at random
            let (a, b) = (block[0][0], block[0][1]);
            let k = (c.total - len as f64 * a) / (b - a);
            let k_int = k.round();
            if (k - k_int).abs() > VALUE_TOL || k_int < 0.0 || k_int as usize > len {
                return Err(Error::InvalidArgument(format!("constraint total {} unreachable", c.total)));
            }
            out.fill(a);
            for i in sample_indices(rng, len, k_int as usize) {
                out[i] = b;
            }
            return Ok(());
        }
        let n_max = block[0].len() - 1;
        let is_fock = block.iter().all(|l| l.iter().enumerate().all(|(k, &v)| v == k as f64) && l.len() == n_max + 1);
        let total = c.total.round();
        if is_fock && (c.total - total).abs() < VALUE_TOL && total >= 0.0 {
            // stars and bars: choose len-1 bar positions among total+len-1 slots
            let total = total as usize;
            for _ in 0..REJECTION_CAP {
                let slots = total + len - 1;
                let mut bars: Vec<usize> = sample_indices(rng, slots, len - 1).into_vec();
                bars.sort_unstable();
                let mut prev: isize = -1;
                let mut ok = true;
                for (i, &bpos) in bars.iter().chain(std::iter::once(&slots)).enumerate() {
                    let count = (bpos as isize - prev - 1) as usize;
                    prev = bpos as isize;
                    if count > n_max {
                        ok = false;
                        break;
                    }
                    out[i] = count as f64;
                }
                if ok {
                    return Ok(());
                }
            }
        } else {
            for _ in 0..REJECTION_CAP {
                for (o, ls) in out.iter_mut().zip(block) {
                    *o = ls[rng.random_range(0..ls.len())];
                }
                if (out.iter().sum::<f64>() - c.total).abs() < VALUE_TOL {
                    return Ok(());
                }
            }
        }
        Err(Error::InvalidArgument(format!(
            "rejection sampling for constraint {c:?} exceeded {REJECTION_CAP} attempts"
        )))
    }
}

/// Minimum-image separation of two coordinates in a periodic box of side `l`.
pub fn minimum_image_delta(x: f64, y: f64, l: f64) -> f64 {
    let d = x - y;
    d - l * (d / l + 0.5).floor()
}

/// Euclidean distance under the minimum-image convention. `box_sides[d]` is
/// `None` for open (or unbounded) directions.
pub fn minimum_image_distance(x: &[f64], y: &[f64], box_sides: &[Option<f64>]) -> f64 {
    x.iter()
        .zip(y)
        .zip(box_sides)
        .map(|((&a, &b), l)| {
            let d = match l {
                Some(l) => minimum_image_delta(a, b, *l),
                None => a - b,
            };
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// N particles in d continuous dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleHilbert {
    n_particles: usize,
    extent: Vec<f64>,
    pbc: Vec<bool>,
}

impl ParticleHilbert {
    /// `extent[d]` may be `f64::INFINITY` for an unbounded direction; `pbc`
    /// is only allowed on finite directions.
    pub fn new(n_particles: usize, extent: &[f64], pbc: &[bool]) -> Result<Self> {
        if extent.len() != pbc.len() {
            return Err(Error::InvalidArgument("extent and pbc lengths differ".into()));
        }
        for (d, (&l, &p)) in extent.iter().zip(pbc).enumerate() {
            if !(l > 0.0) {
                return Err(Error::InvalidArgument(format!("extent of dimension {d} must be positive")));
            }
            if p && !l.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "periodic boundaries need a finite extent (dimension {d})"
                )));
            }
        }
        Ok(ParticleHilbert { n_particles, extent: extent.to_vec(), pbc: pbc.to_vec() })
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn n_dim(&self) -> usize {
        self.extent.len()
    }

    pub fn extent(&self) -> &[f64] {
        &self.extent
    }

    pub fn pbc(&self) -> &[bool] {
        &self.pbc
    }

    pub fn size(&self) -> usize {
        self.n_particles * self.n_dim()
    }

    fn box_sides(&self) -> Vec<Option<f64>> {
        self.extent.iter().zip(&self.pbc).map(|(&l, &p)| p.then_some(l)).collect()
    }

    /// Distance between the positions of two particles (each of length d).
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        minimum_image_distance(a, b, &self.box_sides())
    }

    /// Wraps periodic coordinates of a full configuration into `[0, L)`.
    pub fn wrap(&self, x: &mut [f64]) {
        let d = self.n_dim();
        for (k, v) in x.iter_mut().enumerate() {
            let dim = k % d;
            if self.pbc[dim] {
                let l = self.extent[dim];
                *v = v.rem_euclid(l);
            }
        }
    }

    /// Uniform in finite boxes, standard normal along unbounded directions.
    pub fn random_state(&self, key: RngKey, n: usize) -> Result<Batch> {
        let mut rng = key.rng();
        let mut b = Batch::with_capacity(self.size(), n);
        let mut row = vec![0.0; self.size()];
        for _ in 0..n {
            self.random_state_into(&mut rng, &mut row);
            b.push(&row)?;
        }
        Ok(b)
    }

    pub fn random_state_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let d = self.n_dim();
        for (k, o) in out.iter_mut().enumerate() {
            let l = self.extent[k % d];
            *o = if l.is_finite() {
                rng.random_range(0.0..l)
            } else {
                StandardNormal.sample(rng)
            };
        }
    }
}

/// Either kind of basis, as consumed by samplers and variational states.
#[derive(Clone, Debug)]
pub enum Hilbert {
    Discrete(Arc<DiscreteHilbert>),
    Particle(Arc<ParticleHilbert>),
}

impl Hilbert {
    pub fn size(&self) -> usize {
        match self {
            Hilbert::Discrete(h) => h.size(),
            Hilbert::Particle(h) => h.size(),
        }
    }

    pub fn random_state_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) -> Result<()> {
        match self {
            Hilbert::Discrete(h) => h.random_state_into(rng, out),
            Hilbert::Particle(h) => {
                h.random_state_into(rng, out);
                Ok(())
            }
        }
    }

    pub fn as_discrete(&self) -> Option<&Arc<DiscreteHilbert>> {
        match self {
            Hilbert::Discrete(h) => Some(h),
            Hilbert::Particle(_) => None,
        }
    }
}

impl From<DiscreteHilbert> for Hilbert {
    fn from(h: DiscreteHilbert) -> Self {
        Hilbert::Discrete(Arc::new(h))
    }
}

impl From<ParticleHilbert> for Hilbert {
    fn from(h: ParticleHilbert) -> Self {
        Hilbert::Particle(Arc::new(h))
    }
}

impl From<Arc<DiscreteHilbert>> for Hilbert {
    fn from(h: Arc<DiscreteHilbert>) -> Self {
        Hilbert::Discrete(h)
    }
}

impl From<Arc<ParticleHilbert>> for Hilbert {
    fn from(h: Arc<ParticleHilbert>) -> Self {
        Hilbert::Particle(h)
    }
}
