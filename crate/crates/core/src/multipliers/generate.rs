//! Seeded generators for every multiplier family.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::seq::{index, SliceRandom};
use rand::Rng;

use super::{Sampler, Side, SparseMultiplier, Stage};
use crate::rng::{gaussian, seeded, split_seed, standard_normal};
use crate::scalar::cis;
use crate::{Complex64, Error, Mat, Result, Scalar};

/// Stream indices used to derive independent sub-seeds from one seed.
const DIAGONAL_STREAM: u64 = 0;
const SAMPLE_STREAM: u64 = 1;
const PERMUTE_STREAM: u64 = 2;
const STAGE_STREAM: u64 = 3;

/// Construction switches shared by the generators. Defaults give the
/// randomized multipliers used by the pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct Flags {
    /// Replace the random diagonal by the identity.
    pub unit_diagonal: bool,
    /// Random permutation after the butterflies (or after the sparse
    /// orthogonal stages), before sampling.
    pub permute: bool,
    /// Uniform sampling of `k` lines. When false the first `k` lines are kept
    /// with unit scale.
    pub sample: bool,
    /// Bit-reversal of the input before the butterflies (full-depth FFT order).
    pub bit_reverse: bool,
    /// Bidiagonal family: use identity permutations between factors.
    pub identity_permutations: bool,
    /// Sparse orthogonal family: random diagonal after the stages.
    pub trailing_diagonal: bool,
}

impl Default for Flags {
    fn default() -> Self {
        Flags {
            unit_diagonal: false,
            permute: false,
            sample: true,
            bit_reverse: false,
            identity_permutations: false,
            trailing_diagonal: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrthogonalKind {
    Givens,
    Householder,
}

fn log2_exact(n: usize) -> Result<u32> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::arg(alloc::format!("dimension {n} is not a power of 2")));
    }
    Ok(n.trailing_zeros())
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::arg(alloc::format!("sample size {k} must lie in 1..={n}")));
    }
    Ok(())
}

fn random_permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut seeded(seed));
    p
}

fn bit_reversal(n: usize) -> Vec<usize> {
    let bits = n.trailing_zeros();
    (0..n)
        .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
        .collect()
}

/// `k` distinct indices of `0..n`, sorted; uniform when `flags.sample`, the
/// leading `k` otherwise. Scale is `sqrt(n/k)` for uniform sampling.
fn sampler(n: usize, k: usize, seed: u64, flags: &Flags, rescale: bool) -> Sampler {
    if !flags.sample {
        return Sampler {
            indices: (0..k).collect(),
            scale: 1.0,
        };
    }
    let mut indices = index::sample(&mut seeded(split_seed(seed, SAMPLE_STREAM)), n, k).into_vec();
    indices.sort_unstable();
    let scale = if rescale { (n as f64 / k as f64).sqrt() } else { 1.0 };
    Sampler { indices, scale }
}

fn butterfly_family<T: Scalar>(
    n: usize,
    d: u32,
    k: usize,
    seed: u64,
    flags: Flags,
    diagonal: impl FnOnce(u64) -> Vec<T>,
    twiddles: impl Fn(u32) -> Option<Vec<T>>,
) -> Result<SparseMultiplier<T>> {
    let depth = log2_exact(n)?;
    if d > depth {
        return Err(Error::arg(alloc::format!("level count {d} exceeds log2 n = {depth}")));
    }
    check_k(k, n)?;
    let mut stages = Vec::with_capacity(d as usize + 3);
    if !flags.unit_diagonal {
        stages.push(Stage::Diagonal(diagonal(split_seed(seed, DIAGONAL_STREAM))));
    }
    if flags.bit_reverse {
        stages.push(Stage::permutation(bit_reversal(n)));
    }
    for level in 0..d {
        stages.push(Stage::Butterfly {
            level,
            twiddles: twiddles(level),
        });
    }
    if flags.permute {
        stages.push(Stage::permutation(random_permutation(n, split_seed(seed, PERMUTE_STREAM))));
    }
    let s = sampler(n, k, seed, &flags, true);
    SparseMultiplier::from_stages(n, stages, Some(s), Side::Left)
}

/// Abridged randomized Hadamard multiplier: random ±1 diagonal, `d` butterfly
/// levels, uniform sampling of `k` rows scaled by `sqrt(n/k)`.
pub fn gen_abridged_hadamard(n: usize, d: u32, k: usize, seed: u64, flags: Flags) -> Result<SparseMultiplier<f64>> {
    butterfly_family(
        n,
        d,
        k,
        seed,
        flags,
        |s| {
            let mut rng = seeded(s);
            (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
        },
        |_| None,
    )
}

/// Abridged randomized Fourier multiplier: random unit-modulus diagonal and
/// the `d` decimation-in-time FFT stages nearest the input.
pub fn gen_abridged_fourier(
    n: usize,
    d: u32,
    k: usize,
    seed: u64,
    flags: Flags,
) -> Result<SparseMultiplier<Complex64>> {
    butterfly_family(
        n,
        d,
        k,
        seed,
        flags,
        |s| {
            let mut rng = seeded(s);
            (0..n)
                .map(|_| cis(rng.random_range(0.0..2.0 * PI)))
                .collect()
        },
        |level| {
            let h = 1usize << level;
            Some(
                (0..h)
                    .map(|j| cis(-PI * j as f64 / h as f64))
                    .collect(),
            )
        },
    )
}

/// Pure uniform sampling of `k` lines scaled by `sqrt(n/k)`; with
/// `flags.sample` off, the leading `k` lines at unit scale (the identity when
/// `k = n`). Works for any `n`.
pub fn gen_sampling(n: usize, k: usize, seed: u64, flags: Flags) -> Result<SparseMultiplier<f64>> {
    if n == 0 {
        return Err(Error::arg("multiplier dimension must be positive"));
    }
    check_k(k, n)?;
    let s = sampler(n, k, seed, &flags, true);
    SparseMultiplier::from_stages(n, Vec::new(), Some(s), Side::Left)
}

/// `factors` pairs of (random bidiagonal, random permutation), then uniform
/// sampling of `k` rows without rescaling.
pub fn gen_bidiag_perm(n: usize, factors: usize, k: usize, seed: u64, flags: Flags) -> Result<SparseMultiplier<f64>> {
    if factors == 0 {
        return Err(Error::arg("bidiagonal family needs at least one factor"));
    }
    check_k(k, n)?;
    let mut rng = seeded(split_seed(seed, STAGE_STREAM));
    let mut stages = Vec::with_capacity(2 * factors);
    for f in 0..factors {
        let diag = (0..n).map(|_| standard_normal(&mut rng)).collect();
        let superdiag = (0..n.saturating_sub(1)).map(|_| standard_normal(&mut rng)).collect();
        stages.push(Stage::Bidiagonal { diag, superdiag });
        let perm = if flags.identity_permutations {
            (0..n).collect()
        } else {
            random_permutation(n, split_seed(split_seed(seed, PERMUTE_STREAM), f as u64))
        };
        stages.push(Stage::permutation(perm));
    }
    let s = sampler(n, k, seed, &flags, false);
    SparseMultiplier::from_stages(n, stages, Some(s), Side::Left)
}

/// First `k` rows of `P_i = Q_1 ⋯ Q_i`, a product of `i` random Givens
/// rotations or sparse Householder reflectors (support ≤ 4).
///
/// The sampler here always takes the leading `k` lines (`flags.sample` is
/// ignored); use `flags.permute` to randomize which lines those are.
pub fn gen_orthogonal_partial(
    n: usize,
    kind: OrthogonalKind,
    i: usize,
    k: usize,
    seed: u64,
    flags: Flags,
) -> Result<SparseMultiplier<f64>> {
    check_k(k, n)?;
    if kind == OrthogonalKind::Givens && n < 2 && i > 0 {
        return Err(Error::arg("Givens rotations need n ≥ 2"));
    }
    if i == 0 && k == n && !flags.permute && !flags.trailing_diagonal {
        log::warn!("identity multiplier: no stages and k = n");
    }
    let mut rng = seeded(split_seed(seed, STAGE_STREAM));
    let mut qs: Vec<Stage<f64>> = (0..i)
        .map(|_| match kind {
            OrthogonalKind::Givens => {
                let pair = index::sample(&mut rng, n, 2);
                Stage::givens(pair.index(0), pair.index(1), rng.random_range(0.0..2.0 * PI))
            }
            OrthogonalKind::Householder => {
                let mut support = index::sample(&mut rng, n, n.min(4)).into_vec();
                support.sort_unstable();
                let mut values: Vec<f64> = support.iter().map(|_| standard_normal(&mut rng)).collect();
                let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
                values.iter_mut().for_each(|v| *v /= norm);
                Stage::Householder { support, values }
            }
        })
        .collect();
    // P_i x = Q_1(Q_2(⋯ Q_i x)), so Q_i comes first in application order.
    qs.reverse();
    let mut stages = qs;
    if flags.trailing_diagonal {
        let mut r = seeded(split_seed(seed, DIAGONAL_STREAM));
        stages.push(Stage::Diagonal(
            (0..n).map(|_| if r.random::<bool>() { 1.0 } else { -1.0 }).collect(),
        ));
    }
    if flags.permute {
        stages.push(Stage::permutation(random_permutation(n, split_seed(seed, PERMUTE_STREAM))));
    }
    let s = Sampler {
        indices: (0..k).collect(),
        scale: 1.0,
    };
    SparseMultiplier::from_stages(n, stages, Some(s), Side::Left)
}

/// `k × n` matrix of iid standard normal entries.
pub fn gen_gaussian(k: usize, n: usize, seed: u64) -> Mat {
    gaussian(k, n, &mut seeded(seed))
}
