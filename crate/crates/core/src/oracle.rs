//! Access-counted gateway to an input matrix.
//!
//! Algorithms read `M` only through [`MatrixOracle::read_block`] and friends.
//! The oracle remembers every distinct position it has handed out; repeated
//! reads of one entry count once. Ground-truth error metrics go through the
//! separate audit channel ([`MatrixOracle::audit`]), which never touches the
//! counter.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Mat, Result};

/// Entry rule for implicitly defined inputs.
pub type EntryFn = Arc<dyn Fn(usize, usize) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Backing {
    Dense(Arc<Mat>),
    Implicit(EntryFn),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccessReport {
    /// Distinct entries read.
    pub reads: u64,
    /// `reads / (m·n)`.
    pub fraction: f64,
}

#[derive(Clone)]
pub struct MatrixOracle {
    backing: Backing,
    rows: usize,
    cols: usize,
    touched: Vec<u64>,
    reads: u64,
}

impl MatrixOracle {
    pub fn new(m: Mat) -> Self {
        let (rows, cols) = m.shape();
        Self::with_backing(Backing::Dense(Arc::new(m)), rows, cols)
    }

    /// Oracle over an implicit rule `f(i, j)`; nothing is materialized.
    pub fn implicit(rows: usize, cols: usize, f: EntryFn) -> Self {
        Self::with_backing(Backing::Implicit(f), rows, cols)
    }

    fn with_backing(backing: Backing, rows: usize, cols: usize) -> Self {
        MatrixOracle {
            backing,
            rows,
            cols,
            touched: vec![0; (rows * cols).div_ceil(64)],
            reads: 0,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    fn value(&self, i: usize, j: usize) -> f64 {
        match &self.backing {
            Backing::Dense(m) => m[(i, j)],
            Backing::Implicit(f) => f(i, j),
        }
    }

    #[inline]
    fn mark(&mut self, i: usize, j: usize) {
        let bit = i * self.cols + j;
        let word = &mut self.touched[bit / 64];
        let mask = 1u64 << (bit % 64);
        if *word & mask == 0 {
            *word |= mask;
            self.reads += 1;
        }
    }

    fn check(&self, rows: &[usize], cols: &[usize]) -> Result<()> {
        let bad_row = rows.iter().find(|&&i| i >= self.rows);
        let bad_col = cols.iter().find(|&&j| j >= self.cols);
        if bad_row.is_some() || bad_col.is_some() {
            return Err(Error::OutOfRange {
                row: bad_row.copied().unwrap_or(0),
                col: bad_col.copied().unwrap_or(0),
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(())
    }

    /// The `|rows| × |cols|` submatrix `M[rows, cols]`.
    pub fn read_block(&mut self, rows: &[usize], cols: &[usize]) -> Result<Mat> {
        self.check(rows, cols)?;
        let mut out = Mat::zeros(rows.len(), cols.len());
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                self.mark(i, j);
                out[(a, b)] = self.value(i, j);
            }
        }
        Ok(out)
    }

    /// Full rows `M[rows, :]`.
    pub fn read_rows(&mut self, rows: &[usize]) -> Result<Mat> {
        let all: Vec<usize> = (0..self.cols).collect();
        self.read_block(rows, &all)
    }

    /// Full columns `M[:, cols]`.
    pub fn read_cols(&mut self, cols: &[usize]) -> Result<Mat> {
        let all: Vec<usize> = (0..self.rows).collect();
        self.read_block(&all, cols)
    }

    pub fn read_entry(&mut self, i: usize, j: usize) -> Result<f64> {
        self.check(&[i], &[j])?;
        self.mark(i, j);
        Ok(self.value(i, j))
    }

    pub fn access_report(&self) -> AccessReport {
        let total = (self.rows * self.cols) as f64;
        AccessReport {
            reads: self.reads,
            fraction: if total > 0.0 { self.reads as f64 / total } else { 0.0 },
        }
    }

    pub fn reads(&self) -> u64 {
        self.reads
    }

    pub fn is_touched(&self, i: usize, j: usize) -> bool {
        let bit = i * self.cols + j;
        self.touched[bit / 64] & (1u64 << (bit % 64)) != 0
    }

    /// Read positions in row-major order.
    pub fn touched(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.rows * self.cols)
            .filter(move |&b| self.touched[b / 64] & (1u64 << (b % 64)) != 0)
            .map(move |b| (b / self.cols, b % self.cols))
    }

    /// Forgets all reads.
    pub fn reset(&mut self) {
        self.touched.iter_mut().for_each(|w| *w = 0);
        self.reads = 0;
    }

    /// Audit channel: the whole matrix, uncounted.
    pub fn audit(&self) -> Mat {
        match &self.backing {
            Backing::Dense(m) => (**m).clone(),
            Backing::Implicit(f) => Mat::from_fn(self.rows, self.cols, |i, j| f(i, j)),
        }
    }

    /// Audit channel: one entry, uncounted.
    pub fn audit_entry(&self, i: usize, j: usize) -> f64 {
        self.value(i, j)
    }
}

impl core::fmt::Debug for MatrixOracle {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("MatrixOracle")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("reads", &self.reads)
            .finish()
    }
}
