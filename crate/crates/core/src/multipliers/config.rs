//! Serializable multiplier descriptions.

use super::{
    gen_abridged_fourier, gen_abridged_hadamard, gen_bidiag_perm, gen_gaussian, gen_orthogonal_partial, gen_sampling,
    Flags, Multiplier, OrthogonalKind, Side,
};
use crate::{Complex64, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Uniform row/column sampling without mixing.
    Sampling,
    Hadamard,
    Fourier,
    BidiagPerm,
    Givens,
    Householder,
    Gaussian,
}

impl Family {
    pub fn is_complex(self) -> bool {
        self == Family::Fourier
    }
}

/// `{family, n, d, k_or_l, seed, flags}`.
///
/// `d` is the butterfly level count for Hadamard/Fourier,
/// ignored for `sampling`, the number of
/// (bidiagonal, permutation) pairs for `bidiag_perm`, the number of sparse
/// orthogonal stages for `givens`/`householder`, and ignored for `gaussian`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MultiplierConfig {
    pub family: Family,
    pub n: usize,
    #[serde(default)]
    pub d: usize,
    pub k_or_l: usize,
    pub seed: u64,
    #[serde(default)]
    pub flags: Flags,
}

/// Multiplier over whichever field the family lives in.
#[derive(Debug, Clone)]
pub enum AnyMultiplier {
    Real(Multiplier<f64>),
    Complex(Multiplier<Complex64>),
}

impl AnyMultiplier {
    pub fn flops(&self) -> u64 {
        match self {
            AnyMultiplier::Real(m) => m.flops(),
            AnyMultiplier::Complex(m) => m.flops(),
        }
    }
}

impl MultiplierConfig {
    /// Builds the multiplier for use on `side`. Right multipliers reuse the
    /// left construction with the sampled rows turned into columns.
    pub fn build(&self, side: Side) -> Result<AnyMultiplier> {
        let d32 = u32::try_from(self.d).map_err(|_| Error::arg("level count too large"))?;
        let (n, k, seed, flags) = (self.n, self.k_or_l, self.seed, self.flags);
        let real = |s: Result<super::SparseMultiplier<f64>>| -> Result<AnyMultiplier> {
            Ok(AnyMultiplier::Real(s?.with_side(side).into()))
        };
        match self.family {
            Family::Sampling => real(gen_sampling(n, k, seed, flags)),
            Family::Hadamard => real(gen_abridged_hadamard(n, d32, k, seed, flags)),
            Family::Fourier => Ok(AnyMultiplier::Complex(
                gen_abridged_fourier(n, d32, k, seed, flags)?.with_side(side).into(),
            )),
            Family::BidiagPerm => real(gen_bidiag_perm(n, self.d, k, seed, flags)),
            Family::Givens => real(gen_orthogonal_partial(n, OrthogonalKind::Givens, self.d, k, seed, flags)),
            Family::Householder => real(gen_orthogonal_partial(
                n,
                OrthogonalKind::Householder,
                self.d,
                k,
                seed,
                flags,
            )),
            Family::Gaussian => {
                let g = gen_gaussian(k, n, seed);
                Ok(AnyMultiplier::Real(match side {
                    Side::Left => Multiplier::dense(g, side),
                    Side::Right => Multiplier::dense(g.transpose(), side),
                }))
            }
        }
    }
}
