//! Structured multipliers `F` (`k × m`, applied on the left) and `H`
//! (`n × l`, applied on the right).
//!
//! A [`SparseMultiplier`] is an `n × n` operator `P` written as an ordered list
//! of cheap [`Stage`]s (applied to a vector in list order) followed by a
//! sampler. On the left side the realized operator is `scale · P[idx, :]`; on
//! the right side it is `scale · P[:, idx]`. Applying a multiplier to a
//! [`MatrixOracle`] reads only the rows (or columns) of `M` inside the support
//! of the realized operator.

mod config;
mod generate;
mod stage;

use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering};

pub use config::{AnyMultiplier, Family, MultiplierConfig};
pub use generate::{
    gen_abridged_fourier, gen_abridged_hadamard, gen_bidiag_perm, gen_gaussian, gen_orthogonal_partial,
    gen_sampling, Flags, OrthogonalKind,
};
pub use stage::Stage;

use self::stage::{apply_dense, SparseAcc};
use crate::linalg::fma_cost;
use crate::{Complex64, Error, Mat, MatrixOracle, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// Row (left) or column (right) selection with a common scale factor.
#[derive(Debug, Clone, PartialEq)]
pub struct Sampler {
    pub indices: Vec<usize>,
    pub scale: f64,
}

/// Sparse rows (left) or columns (right) of a realized multiplier:
/// `lines[t]` lists `(index, value)` pairs sorted by index.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseLines<T> {
    /// Ambient dimension the indices range over.
    pub dim: usize,
    pub lines: Vec<Vec<(usize, T)>>,
}

impl<T: Scalar> SparseLines<T> {
    /// Sorted union of the supports.
    pub fn support(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.lines.iter().flatten().map(|p| p.0).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    pub fn nnz(&self) -> usize {
        self.lines.iter().map(Vec::len).sum()
    }

    pub fn max_line_nnz(&self) -> usize {
        self.lines.iter().map(Vec::len).max().unwrap_or(0)
    }

    fn from_dense_rows(a: &Mat<T>) -> Self {
        SparseLines {
            dim: a.cols(),
            lines: (0..a.rows())
                .map(|i| {
                    a.row(i)
                        .iter()
                        .enumerate()
                        .filter(|(_, v)| !v.is_zero())
                        .map(|(j, &v)| (j, v))
                        .collect()
                })
                .collect(),
        }
    }
}

/// Structured sparse multiplier with its own flop counter.
#[derive(Debug)]
pub struct SparseMultiplier<T = f64> {
    n: usize,
    stages: Vec<Stage<T>>,
    sampler: Sampler,
    side: Side,
    flops: AtomicU64,
}

impl<T: Clone> Clone for SparseMultiplier<T> {
    fn clone(&self) -> Self {
        SparseMultiplier {
            n: self.n,
            stages: self.stages.clone(),
            sampler: self.sampler.clone(),
            side: self.side,
            flops: AtomicU64::new(self.flops.load(Ordering::Relaxed)),
        }
    }
}

impl<T: Scalar> SparseMultiplier<T> {
    /// Assembles a multiplier from explicit stages. A `None` sampler keeps all
    /// `n` lines in natural order with unit scale.
    pub fn from_stages(n: usize, stages: Vec<Stage<T>>, sampler: Option<Sampler>, side: Side) -> Result<Self> {
        if n == 0 {
            return Err(Error::arg("multiplier dimension must be positive"));
        }
        if let Some(bad) = stages.iter().find(|s| s.len_hint().is_some_and(|l| l != n)) {
            return Err(Error::dim(alloc::format!("stage {bad:?} does not act on length {n}")));
        }
        let sampler = sampler.unwrap_or(Sampler {
            indices: (0..n).collect(),
            scale: 1.0,
        });
        if sampler.indices.iter().any(|&i| i >= n) {
            return Err(Error::arg("sampler index out of range"));
        }
        Ok(SparseMultiplier {
            n,
            stages,
            sampler,
            side,
            flops: AtomicU64::new(0),
        })
    }

    /// Ambient dimension `n` of the pre-sampling operator.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of sampled lines (`k` or `l`).
    pub fn samples(&self) -> usize {
        self.sampler.indices.len()
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn stages(&self) -> &[Stage<T>] {
        &self.stages
    }

    pub fn sampler(&self) -> &Sampler {
        &self.sampler
    }

    /// Same operator used on the other side: left `F = S·P` becomes right
    /// `H = P·Sᵀ` built from the same stages and sampled indices.
    pub fn with_side(mut self, side: Side) -> Self {
        self.side = side;
        self
    }

    pub fn flops(&self) -> u64 {
        self.flops.load(Ordering::Relaxed)
    }

    pub fn reset_flops(&self) {
        self.flops.store(0, Ordering::Relaxed);
    }

    fn count(&self, f: u64) {
        self.flops.fetch_add(f, Ordering::Relaxed);
    }

    /// Realized rows (left) or columns (right) as sparse lines.
    ///
    /// Each line is obtained by pushing a unit vector through the stages
    /// (transposed and reversed for rows), touching only its growing support.
    pub fn lines(&self) -> SparseLines<T> {
        let mut acc = SparseAcc::new(self.n);
        let mut spent = 0;
        let lines = self
            .sampler
            .indices
            .iter()
            .map(|&i| {
                acc.set_unit(i);
                match self.side {
                    Side::Left => {
                        for s in self.stages.iter().rev() {
                            spent += acc.apply(s, true);
                        }
                    }
                    Side::Right => {
                        for s in &self.stages {
                            spent += acc.apply(s, false);
                        }
                    }
                }
                acc.entries(self.sampler.scale)
            })
            .collect();
        self.count(spent);
        SparseLines { dim: self.n, lines }
    }

    /// `P·x` for the pre-sampling operator.
    pub fn apply_operator(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n);
        let mut y = x.to_vec();
        let mut spent = 0;
        for s in &self.stages {
            spent += apply_dense(s, &mut y, false);
        }
        self.count(spent);
        y
    }

    /// The realized operator times a vector: `F·x` (length `k`) on the left,
    /// `H·x` (length `n`) on the right.
    pub fn apply_vec(&self, x: &[T]) -> Vec<T> {
        let scale = self.sampler.scale;
        match self.side {
            Side::Left => {
                let y = self.apply_operator(x);
                self.sampler.indices.iter().map(|&i| y[i].scale(scale)).collect()
            }
            Side::Right => {
                assert_eq!(x.len(), self.samples());
                let mut z = alloc::vec![T::zero(); self.n];
                for (&i, &xi) in self.sampler.indices.iter().zip(x) {
                    z[i] += xi.scale(scale);
                }
                self.apply_operator(&z)
            }
        }
    }

    /// Pre-sampling operator `P` as a dense `n × n` matrix.
    pub fn densify_operator(&self) -> Mat<T> {
        let cols: Vec<Vec<T>> = (0..self.n)
            .map(|j| {
                let mut e = alloc::vec![T::zero(); self.n];
                e[j] = T::one();
                self.apply_operator(&e)
            })
            .collect();
        Mat::from_cols(&cols)
    }

    /// Realized operator as a dense matrix (`k × n` left, `n × l` right).
    pub fn densify(&self) -> Mat<T> {
        let lines = self.lines();
        let k = lines.lines.len();
        let mut out = match self.side {
            Side::Left => Mat::zeros(k, self.n),
            Side::Right => Mat::zeros(self.n, k),
        };
        for (t, line) in lines.lines.iter().enumerate() {
            for &(i, v) in line {
                match self.side {
                    Side::Left => out[(t, i)] = v,
                    Side::Right => out[(i, t)] = v,
                }
            }
        }
        out
    }
}

impl SparseMultiplier<f64> {
    /// Embeds a real multiplier into the complex field.
    pub fn to_complex(&self) -> SparseMultiplier<Complex64> {
        let stages = self
            .stages
            .iter()
            .map(|s| match s {
                Stage::Diagonal(d) => Stage::Diagonal(d.iter().map(|&x| Complex64::from_real(x)).collect()),
                Stage::Butterfly { level, twiddles } => Stage::Butterfly {
                    level: *level,
                    twiddles: twiddles
                        .as_ref()
                        .map(|t| t.iter().map(|&x| Complex64::from_real(x)).collect()),
                },
                Stage::Permutation { perm, inverse } => Stage::Permutation {
                    perm: perm.clone(),
                    inverse: inverse.clone(),
                },
                Stage::Bidiagonal { diag, superdiag } => Stage::Bidiagonal {
                    diag: diag.clone(),
                    superdiag: superdiag.clone(),
                },
                Stage::Givens { i, j, cos, sin } => Stage::Givens {
                    i: *i,
                    j: *j,
                    cos: *cos,
                    sin: *sin,
                },
                Stage::Householder { support, values } => Stage::Householder {
                    support: support.clone(),
                    values: values.clone(),
                },
            })
            .collect();
        SparseMultiplier {
            n: self.n,
            stages,
            sampler: self.sampler.clone(),
            side: self.side,
            flops: AtomicU64::new(0),
        }
    }
}

/// Dense multiplier (Gaussian baselines, or dense singular-vector multipliers).
#[derive(Debug)]
pub struct DenseMultiplier<T = f64> {
    /// `k × m` on the left, `n × l` on the right.
    pub mat: Mat<T>,
    pub side: Side,
    flops: AtomicU64,
}

impl<T: Clone> Clone for DenseMultiplier<T> {
    fn clone(&self) -> Self {
        DenseMultiplier {
            mat: self.mat.clone(),
            side: self.side,
            flops: AtomicU64::new(self.flops.load(Ordering::Relaxed)),
        }
    }
}

/// Either kind of multiplier, used uniformly by the sketching code.
#[derive(Debug, Clone)]
pub enum Multiplier<T = f64> {
    Structured(SparseMultiplier<T>),
    Dense(DenseMultiplier<T>),
}

impl<T: Scalar> From<SparseMultiplier<T>> for Multiplier<T> {
    fn from(s: SparseMultiplier<T>) -> Self {
        Multiplier::Structured(s)
    }
}

impl<T: Scalar> Multiplier<T> {
    pub fn dense(mat: Mat<T>, side: Side) -> Self {
        Multiplier::Dense(DenseMultiplier {
            mat,
            side,
            flops: AtomicU64::new(0),
        })
    }

    pub fn side(&self) -> Side {
        match self {
            Multiplier::Structured(s) => s.side(),
            Multiplier::Dense(d) => d.side,
        }
    }

    /// Ambient dimension the multiplier acts on (`m` for `F`, `n` for `H`).
    pub fn dim(&self) -> usize {
        match self {
            Multiplier::Structured(s) => s.dim(),
            Multiplier::Dense(d) => match d.side {
                Side::Left => d.mat.cols(),
                Side::Right => d.mat.rows(),
            },
        }
    }

    /// Sketch size (`k` for `F`, `l` for `H`).
    pub fn samples(&self) -> usize {
        match self {
            Multiplier::Structured(s) => s.samples(),
            Multiplier::Dense(d) => match d.side {
                Side::Left => d.mat.rows(),
                Side::Right => d.mat.cols(),
            },
        }
    }

    pub fn flops(&self) -> u64 {
        match self {
            Multiplier::Structured(s) => s.flops(),
            Multiplier::Dense(d) => d.flops.load(Ordering::Relaxed),
        }
    }

    fn count(&self, f: u64) {
        match self {
            Multiplier::Structured(s) => s.count(f),
            Multiplier::Dense(d) => {
                d.flops.fetch_add(f, Ordering::Relaxed);
            }
        }
    }

    pub fn lines(&self) -> SparseLines<T> {
        match self {
            Multiplier::Structured(s) => s.lines(),
            Multiplier::Dense(d) => match d.side {
                Side::Left => SparseLines::from_dense_rows(&d.mat),
                Side::Right => SparseLines::from_dense_rows(&d.mat.transpose()),
            },
        }
    }

    pub fn densify(&self) -> Mat<T> {
        match self {
            Multiplier::Structured(s) => s.densify(),
            Multiplier::Dense(d) => d.mat.clone(),
        }
    }

    fn expect_side(&self, side: Side) -> Result<()> {
        if self.side() != side {
            return Err(Error::arg(alloc::format!("multiplier is {:?}-sided, needed {side:?}", self.side())));
        }
        Ok(())
    }

    /// `F·M`, reading only the rows of `M` in the support of `F`.
    pub fn apply_left(&self, o: &mut MatrixOracle) -> Result<Mat<T>> {
        self.expect_side(Side::Left)?;
        if self.dim() != o.rows() {
            return Err(Error::dim(alloc::format!(
                "left multiplier acts on {} rows, matrix has {}",
                self.dim(),
                o.rows()
            )));
        }
        let lines = self.lines();
        let support = lines.support();
        let block = o.read_rows(&support)?;
        let pos = positions(&support, o.rows());
        let n = o.cols();
        let mut out = Mat::zeros(lines.lines.len(), n);
        for (t, line) in lines.lines.iter().enumerate() {
            let orow = out.row_mut(t);
            for &(i, w) in line {
                for (o, &b) in orow.iter_mut().zip(block.row(pos[i])) {
                    *o += w.scale(b);
                }
            }
        }
        self.count(lines.nnz() as u64 * n as u64 * real_times::<T>());
        Ok(out)
    }

    /// `M·H`, reading only the columns of `M` in the support of `H`.
    pub fn apply_right(&self, o: &mut MatrixOracle) -> Result<Mat<T>> {
        self.expect_side(Side::Right)?;
        if self.dim() != o.cols() {
            return Err(Error::dim(alloc::format!(
                "right multiplier acts on {} columns, matrix has {}",
                self.dim(),
                o.cols()
            )));
        }
        let lines = self.lines();
        let support = lines.support();
        let block = o.read_cols(&support)?;
        let pos = positions(&support, o.cols());
        let m = o.rows();
        let mut out = Mat::zeros(m, lines.lines.len());
        for (t, line) in lines.lines.iter().enumerate() {
            for &(j, w) in line {
                let c = pos[j];
                for i in 0..m {
                    out[(i, t)] += w.scale(block[(i, c)]);
                }
            }
        }
        self.count(lines.nnz() as u64 * m as u64 * real_times::<T>());
        Ok(out)
    }

    /// `F·A` for a dense `A` already in memory (no oracle reads).
    pub fn left_times(&self, a: &Mat<T>) -> Result<Mat<T>> {
        self.left_times_with(a, false)
    }

    /// `A·H` for a dense `A` already in memory (no oracle reads).
    pub fn right_times(&self, a: &Mat<T>) -> Result<Mat<T>> {
        self.right_times_with(a, false)
    }

    /// [`Self::left_times`] with compensated (Neumaier) accumulation.
    pub fn left_times_compensated(&self, a: &Mat<T>) -> Result<Mat<T>> {
        self.left_times_with(a, true)
    }

    /// [`Self::right_times`] with compensated (Neumaier) accumulation.
    pub fn right_times_compensated(&self, a: &Mat<T>) -> Result<Mat<T>> {
        self.right_times_with(a, true)
    }

    fn left_times_with(&self, a: &Mat<T>, compensated: bool) -> Result<Mat<T>> {
        self.expect_side(Side::Left)?;
        if self.dim() != a.rows() {
            return Err(Error::dim("left multiplier / matrix rows"));
        }
        let lines = self.lines();
        let c = a.cols();
        let out = Mat::from_fn(lines.lines.len(), c, |t, j| {
            let terms = lines.lines[t].iter().map(|&(i, w)| w * a[(i, j)]);
            if compensated {
                neumaier(T::zero(), terms)
            } else {
                terms.sum()
            }
        });
        self.count(lines.nnz() as u64 * c as u64 * fma_cost::<T>());
        Ok(out)
    }

    fn right_times_with(&self, a: &Mat<T>, compensated: bool) -> Result<Mat<T>> {
        self.expect_side(Side::Right)?;
        if self.dim() != a.cols() {
            return Err(Error::dim("matrix columns / right multiplier"));
        }
        let lines = self.lines();
        let r = a.rows();
        let out = Mat::from_fn(r, lines.lines.len(), |i, t| {
            let terms = lines.lines[t].iter().map(|&(j, w)| a[(i, j)] * w);
            if compensated {
                neumaier(T::zero(), terms)
            } else {
                terms.sum()
            }
        });
        self.count(lines.nnz() as u64 * r as u64 * fma_cost::<T>());
        Ok(out)
    }
}

impl Multiplier<f64> {
    pub fn to_complex(&self) -> Multiplier<Complex64> {
        match self {
            Multiplier::Structured(s) => Multiplier::Structured(s.to_complex()),
            Multiplier::Dense(d) => Multiplier::dense(d.mat.cast(), d.side),
        }
    }
}

/// Real flops for a field-`T` weight times a real entry plus accumulation.
fn real_times<T: Scalar>() -> u64 {
    if T::IS_COMPLEX {
        4
    } else {
        2
    }
}

fn positions(support: &[usize], dim: usize) -> Vec<usize> {
    let mut pos = alloc::vec![usize::MAX; dim];
    for (p, &i) in support.iter().enumerate() {
        pos[i] = p;
    }
    pos
}

/// Neumaier-compensated sum of `start + Σ terms`.
pub fn neumaier<T: Scalar>(start: T, terms: impl IntoIterator<Item = T>) -> T {
    let mut sum = start;
    let mut comp = T::zero();
    for x in terms {
        let t = sum + x;
        // Componentwise magnitude test keeps this valid for complex values.
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
