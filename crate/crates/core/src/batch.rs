//! Row-major batches of configurations.

use crate::error::{Error, Result};

/// A batch of configurations stored row-major; every row has `width` entries.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Batch {
    data: Vec<f64>,
    width: usize,
}

impl Batch {
    pub fn new(width: usize) -> Self {
        Batch { data: Vec::new(), width }
    }

    pub fn with_capacity(width: usize, rows: usize) -> Self {
        Batch { data: Vec::with_capacity(width * rows), width }
    }

    pub fn from_vec(data: Vec<f64>, width: usize) -> Result<Self> {
        if width == 0 && !data.is_empty() || width > 0 && data.len() % width != 0 {
            return Err(Error::ShapeMismatch(format!(
                "{} values do not form rows of width {width}",
                data.len()
            )));
        }
        Ok(Batch { data, width })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        let mut b = Batch::with_capacity(width, rows.len());
        for r in rows {
            b.push(r.as_ref())?;
        }
        Ok(b)
    }

    pub fn push(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.width {
            return Err(Error::ShapeMismatch(format!(
                "row of length {} pushed into batch of width {}",
                row.len(),
                self.width
            )));
        }
        self.data.extend_from_slice(row);
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        if self.width == 0 {
            0
        } else {
            self.data.len() / self.width
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.width.max(1)).take(self.len())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Rows `start..end` as a new batch.
    pub fn slice(&self, start: usize, end: usize) -> Batch {
        Batch { data: self.data[start * self.width..end * self.width].to_vec(), width: self.width }
    }
}
