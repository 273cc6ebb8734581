use alloc::vec::Vec;

use crate::Scalar;

const FRAC_1_SQRT_2: f64 = core::f64::consts::FRAC_1_SQRT_2;

/// One factor of a structured multiplier, acting on vectors of length `n`.
#[derive(Debug, Clone, PartialEq)]
pub enum Stage<T> {
    /// `y_i = d_i x_i`.
    Diagonal(Vec<T>),
    /// Radix-2 butterflies pairing `i` with `i + 2^level` inside blocks of
    /// `2^(level+1)`, scaled by `2^(-1/2)`. `twiddles[j]` multiplies the lower
    /// partner of the `j`-th pair in each block; `None` means all ones
    /// (Hadamard).
    Butterfly { level: u32, twiddles: Option<Vec<T>> },
    /// `y_i = x_{perm[i]}`; `inverse` is the inverse permutation.
    Permutation { perm: Vec<usize>, inverse: Vec<usize> },
    /// Upper bidiagonal: `y_i = diag_i x_i + superdiag_i x_{i+1}`.
    Bidiagonal { diag: Vec<f64>, superdiag: Vec<f64> },
    /// Rotation of coordinates `(i, j)`:
    /// `(x_i, x_j) ↦ (x_i cos θ − x_j sin θ, x_i sin θ + x_j cos θ)`.
    Givens { i: usize, j: usize, cos: f64, sin: f64 },
    /// `I − 2 v vᵀ` for a unit vector `v` with small support.
    Householder { support: Vec<usize>, values: Vec<f64> },
}

impl<T: Scalar> Stage<T> {
    pub fn permutation(perm: Vec<usize>) -> Self {
        let mut inverse = alloc::vec![0; perm.len()];
        for (i, &p) in perm.iter().enumerate() {
            inverse[p] = i;
        }
        Stage::Permutation { perm, inverse }
    }

    pub fn givens(i: usize, j: usize, angle: f64) -> Self {
        Stage::Givens {
            i,
            j,
            cos: angle.cos(),
            sin: angle.sin(),
        }
    }

    /// Real flops spent per output entry.
    pub(crate) fn cost(&self) -> u64 {
        let c = if T::IS_COMPLEX { 4 } else { 1 };
        match self {
            Stage::Diagonal(_) => c,
            Stage::Butterfly { twiddles: None, .. } => c,
            Stage::Butterfly { twiddles: Some(_), .. } => 5,
            Stage::Permutation { .. } => 0,
            Stage::Bidiagonal { .. } | Stage::Givens { .. } => 3 * c,
            Stage::Householder { .. } => 4 * c,
        }
    }

    /// Output positions that may change or become nonzero when the input is
    /// supported on `nz`. Pushed into `out` (duplicates allowed).
    pub(crate) fn affected(&self, nz: &[usize], transpose: bool, n: usize, out: &mut Vec<usize>) {
        match self {
            Stage::Diagonal(_) => out.extend_from_slice(nz),
            Stage::Butterfly { level, .. } => {
                let h = 1usize << level;
                for &i in nz {
                    out.push(i);
                    out.push(i ^ h);
                }
            }
            Stage::Permutation { perm, inverse } => {
                let map = if transpose { perm } else { inverse };
                // Old positions are rewritten too, so stale values get cleared.
                out.extend_from_slice(nz);
                out.extend(nz.iter().map(|&k| map[k]));
            }
            Stage::Bidiagonal { .. } => {
                for &k in nz {
                    out.push(k);
                    if transpose {
                        if k + 1 < n {
                            out.push(k + 1);
                        }
                    } else if k > 0 {
                        out.push(k - 1);
                    }
                }
            }
            Stage::Givens { i, j, .. } => {
                out.extend_from_slice(nz);
                if nz.iter().any(|k| k == i || k == j) {
                    out.push(*i);
                    out.push(*j);
                }
            }
            Stage::Householder { support, .. } => {
                out.extend_from_slice(nz);
                if nz.iter().any(|k| support.contains(k)) {
                    out.extend_from_slice(support);
                }
            }
        }
    }

    /// Output entry `i` computed from the (unmodified) input `x`.
    pub(crate) fn output(&self, i: usize, x: &[T], transpose: bool) -> T {
        match self {
            Stage::Diagonal(d) => d[i] * x[i],
            Stage::Butterfly { level, twiddles } => {
                let h = 1usize << level;
                let lo = i & !h;
                let hi = lo | h;
                let j = lo & (h - 1);
                let w = twiddles.as_ref().map_or(T::one(), |t| t[j]);
                let upper = i == lo;
                let y = if transpose {
                    // Bᵀ: [[1, 1], [w, −w]] / √2.
                    if upper {
                        x[lo] + x[hi]
                    } else {
                        w * (x[lo] - x[hi])
                    }
                } else if upper {
                    x[lo] + w * x[hi]
                } else {
                    x[lo] - w * x[hi]
                };
                y.scale(FRAC_1_SQRT_2)
            }
            Stage::Permutation { perm, inverse } => {
                if transpose {
                    x[inverse[i]]
                } else {
                    x[perm[i]]
                }
            }
            Stage::Bidiagonal { diag, superdiag } => {
                let mut y = x[i].scale(diag[i]);
                if transpose {
                    if i > 0 {
                        y += x[i - 1].scale(superdiag[i - 1]);
                    }
                } else if i + 1 < x.len() {
                    y += x[i + 1].scale(superdiag[i]);
                }
                y
            }
            Stage::Givens { i: a, j: b, cos, sin } => {
                let s = if transpose { -*sin } else { *sin };
                if i == *a {
                    x[*a].scale(*cos) - x[*b].scale(s)
                } else if i == *b {
                    x[*a].scale(s) + x[*b].scale(*cos)
                } else {
                    x[i]
                }
            }
            Stage::Householder { support, values } => match support.iter().position(|&k| k == i) {
                None => x[i],
                Some(p) => {
                    let dot: T = support.iter().zip(values).map(|(&k, &v)| x[k].scale(v)).sum();
                    x[i] - dot.scale(2.0 * values[p])
                }
            },
        }
    }

    pub(crate) fn len_hint(&self) -> Option<usize> {
        match self {
            Stage::Diagonal(d) => Some(d.len()),
            Stage::Permutation { perm, .. } => Some(perm.len()),
            Stage::Bidiagonal { diag, .. } => Some(diag.len()),
            _ => None,
        }
    }
}

/// Dense scratch vector tracking its nonzero support.
pub(crate) struct SparseAcc<T> {
    val: Vec<T>,
    nz: Vec<usize>,
    mark: Vec<bool>,
    scratch: Vec<usize>,
    out: Vec<(usize, T)>,
}

impl<T: Scalar> SparseAcc<T> {
    pub fn new(n: usize) -> Self {
        SparseAcc {
            val: alloc::vec![T::zero(); n],
            nz: Vec::new(),
            mark: alloc::vec![false; n],
            scratch: Vec::new(),
            out: Vec::new(),
        }
    }

    pub fn set_unit(&mut self, i: usize) {
        for &k in &self.nz {
            self.val[k] = T::zero();
            self.mark[k] = false;
        }
        self.nz.clear();
        self.val[i] = T::one();
        self.mark[i] = true;
        self.nz.push(i);
    }

    /// Applies `stage`; returns flops spent.
    pub fn apply(&mut self, stage: &Stage<T>, transpose: bool) -> u64 {
        let n = self.val.len();
        self.scratch.clear();
        stage.affected(&self.nz, transpose, n, &mut self.scratch);
        self.scratch.sort_unstable();
        self.scratch.dedup();
        self.out.clear();
        for &i in &self.scratch {
            self.out.push((i, stage.output(i, &self.val, transpose)));
        }
        for &(i, y) in &self.out {
            self.val[i] = y;
            if !self.mark[i] {
                self.mark[i] = true;
                self.nz.push(i);
            }
        }
        stage.cost() * self.out.len() as u64
    }

    /// Nonzero entries, sorted by index.
    pub fn entries(&self, scale: f64) -> Vec<(usize, T)> {
        let mut e: Vec<(usize, T)> = self
            .nz
            .iter()
            .filter(|&&i| !self.val[i].is_zero())
            .map(|&i| (i, self.val[i].scale(scale)))
            .collect();
        e.sort_unstable_by_key(|p| p.0);
        e
    }
}

/// Applies `stage` to a dense vector in place; returns flops spent.
pub(crate) fn apply_dense<T: Scalar>(stage: &Stage<T>, x: &mut [T], transpose: bool) -> u64 {
    let touched: Vec<usize> = match stage {
        Stage::Givens { i, j, .. } => alloc::vec![*i, *j],
        Stage::Householder { support, .. } => support.clone(),
        _ => (0..x.len()).collect(),
    };
    let out: Vec<T> = touched.iter().map(|&i| stage.output(i, x, transpose)).collect();
    for (&i, y) in touched.iter().zip(out) {
        x[i] = y;
    }
    stage.cost() * touched.len() as u64
}
