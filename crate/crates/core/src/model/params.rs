//! Parameter trees and their binary snapshots.
//!
//! Leaves are dense arrays addressed by a `/`-separated path. The flat
//! parameter vector concatenates leaves in lexicographic path order,
//! row-major within each leaf. Real leaves are stored with zero imaginary
//! part.

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::RngKey;
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DType {
    F64,
    C64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeafSpec {
    pub path: String,
    pub shape: Vec<usize>,
    pub dtype: DType,
}

impl LeafSpec {
    pub fn new(path: &str, shape: &[usize], dtype: DType) -> Self {
        LeafSpec { path: path.to_string(), shape: shape.to_vec(), dtype }
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Leaf {
    spec: LeafSpec,
    offset: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamTree {
    leaves: Vec<Leaf>,
    data: Vec<C64>,
}

const MAGIC: &[u8; 8] = b"NQSPARAM";
const VERSION: u32 = 1;

/// Standard normal truncated to |z| < 2.
pub fn truncated_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let z: f64 = rng.sample(StandardNormal);
        if z.abs() < 2.0 {
            return z;
        }
    }
}

impl ParamTree {
    pub fn zeros(mut specs: Vec<LeafSpec>) -> Result<Self> {
        specs.sort_by(|a, b| a.path.cmp(&b.path));
        if specs.windows(2).any(|w| w[0].path == w[1].path) {
            return Err(Error::InvalidArgument("duplicate parameter path".into()));
        }
        let mut offset = 0;
        let leaves = specs
            .into_iter()
            .map(|spec| {
                let l = Leaf { offset, spec };
                offset += l.spec.len();
                l
            })
            .collect();
        Ok(ParamTree { leaves, data: vec![C64::new(0.0, 0.0); offset] })
    }

    /// Truncated-normal initialization with standard deviation `sigma`;
    /// complex leaves split the variance evenly between real and imaginary
    /// parts. Leaf `k` draws from `key.split(k)`.
    pub fn truncated_normal(specs: Vec<LeafSpec>, key: RngKey, sigma: f64) -> Result<Self> {
        let mut t = Self::zeros(specs)?;
        for k in 0..t.leaves.len() {
            let mut rng = key.split(k as u64).rng();
            let (off, len, dtype) = (t.leaves[k].offset, t.leaves[k].spec.len(), t.leaves[k].spec.dtype);
            for v in &mut t.data[off..off + len] {
                *v = match dtype {
                    DType::F64 => C64::new(sigma * truncated_normal(&mut rng), 0.0),
                    DType::C64 => {
                        let s = sigma / 2f64.sqrt();
                        C64::new(s * truncated_normal(&mut rng), s * truncated_normal(&mut rng))
                    }
                };
            }
        }
        Ok(t)
    }

    pub fn specs(&self) -> Vec<LeafSpec> {
        self.leaves.iter().map(|l| l.spec.clone()).collect()
    }

    pub fn n_params(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    fn leaf(&self, path: &str) -> Result<&Leaf> {
        self.leaves
            .iter()
            .find(|l| l.spec.path == path)
            .ok_or_else(|| Error::InvalidArgument(format!("no parameter leaf '{path}'")))
    }

    pub fn get(&self, path: &str) -> Result<&[C64]> {
        let l = self.leaf(path)?;
        Ok(&self.data[l.offset..l.offset + l.spec.len()])
    }

    pub fn get_mut(&mut self, path: &str) -> Result<&mut [C64]> {
        let l = self.leaf(path)?.clone();
        Ok(&mut self.data[l.offset..l.offset + l.spec.len()])
    }

    pub fn offset(&self, path: &str) -> Result<usize> {
        Ok(self.leaf(path)?.offset)
    }

    /// One flag per flat entry: true for entries of real leaves.
    pub fn real_mask(&self) -> Vec<bool> {
        let mut mask = Vec::with_capacity(self.data.len());
        for l in &self.leaves {
            mask.extend(std::iter::repeat_n(l.spec.dtype == DType::F64, l.spec.len()));
        }
        mask
    }

    pub fn all_complex(&self) -> bool {
        self.leaves.iter().all(|l| l.spec.dtype == DType::C64)
    }

    pub fn all_real(&self) -> bool {
        self.leaves.iter().all(|l| l.spec.dtype == DType::F64)
    }

    /// Same layout, new flat values. Imaginary parts of real leaves are
    /// dropped.
    pub fn with_flat(&self, flat: &[C64]) -> Result<Self> {
        if flat.len() != self.data.len() {
            return Err(Error::ShapeMismatch(format!(
                "flat vector has {} entries, tree has {}",
                flat.len(),
                self.data.len()
            )));
        }
        let mut out = self.clone();
        out.data.copy_from_slice(flat);
        out.project_real();
        Ok(out)
    }

    fn project_real(&mut self) {
        for l in &self.leaves {
            if l.spec.dtype == DType::F64 {
                for v in &mut self.data[l.offset..l.offset + l.spec.len()] {
                    v.im = 0.0;
                }
            }
        }
    }

    /// `self += c·delta`, keeping real leaves real.
    pub fn add_scaled(&mut self, delta: &[C64], c: C64) -> Result<()> {
        if delta.len() != self.data.len() {
            return Err(Error::ShapeMismatch("update length differs from parameter count".into()));
        }
        for (v, d) in self.data.iter_mut().zip(delta) {
            *v += c * d;
        }
        self.project_real();
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Snapshot: magic, version, record count, then per leaf the path,
    /// dtype, shape and little-endian values, followed by the SHA-256 of all
    /// preceding bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = Vec::new();
        b.extend_from_slice(MAGIC);
        b.extend_from_slice(&VERSION.to_le_bytes());
        b.extend_from_slice(&(self.leaves.len() as u32).to_le_bytes());
        for l in &self.leaves {
            let p = l.spec.path.as_bytes();
            b.extend_from_slice(&(p.len() as u32).to_le_bytes());
            b.extend_from_slice(p);
            b.push(match l.spec.dtype {
                DType::F64 => 0,
                DType::C64 => 1,
            });
            b.extend_from_slice(&(l.spec.shape.len() as u32).to_le_bytes());
            for &d in &l.spec.shape {
                b.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for v in &self.data[l.offset..l.offset + l.spec.len()] {
                b.extend_from_slice(&v.re.to_le_bytes());
                if l.spec.dtype == DType::C64 {
                    b.extend_from_slice(&v.im.to_le_bytes());
                }
            }
        }
        let digest = Sha256::digest(&b);
        b.extend_from_slice(&digest);
        b
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() + 8 + 32 {
            return Err(Error::Snapshot("file too short".into()));
        }
        let (body, digest) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(body).as_slice() != digest {
            return Err(Error::Snapshot("checksum mismatch".into()));
        }
        let mut r = Cursor { b: body, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Snapshot("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Snapshot(format!("unsupported version {version}")));
        }
        let n = r.u32()? as usize;
        let mut specs = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            let plen = r.u32()? as usize;
            let path = String::from_utf8(r.take(plen)?.to_vec()).map_err(|_| Error::Snapshot("path is not UTF-8".into()))?;
            let dtype = match r.take(1)?[0] {
                0 => DType::F64,
                1 => DType::C64,
                d => return Err(Error::Snapshot(format!("unknown dtype tag {d}"))),
            };
            let ndim = r.u32()? as usize;
            let shape = (0..ndim).map(|_| r.u64().map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
            let spec = LeafSpec { path, shape, dtype };
            let vals = (0..spec.len())
                .map(|_| {
                    let re = r.f64()?;
                    let im = if dtype == DType::C64 { r.f64()? } else { 0.0 };
                    Ok(C64::new(re, im))
                })
                .collect::<Result<Vec<_>>>()?;
            specs.push(spec);
            values.push(vals);
        }
        if r.pos != body.len() {
            return Err(Error::Snapshot("trailing bytes".into()));
        }
        let mut t = ParamTree::zeros(specs.clone())?;
        for (spec, vals) in specs.iter().zip(values) {
            t.get_mut(&spec.path)?.copy_from_slice(&vals);
        }
        Ok(t)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }

    /// Checks that `other` has the same leaves (paths, shapes, dtypes).
    pub fn same_layout(&self, other: &ParamTree) -> bool {
        self.leaves == other.leaves
    }
}

struct Cursor<'a> {
    b: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.b.len() {
            return Err(Error::Snapshot("unexpected end of data".into()));
        }
        let s = &self.b[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
