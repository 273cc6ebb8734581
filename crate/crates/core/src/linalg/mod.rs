//! Dense kernels: Householder QR with and without column pivoting, one-sided
//! Jacobi SVD, truncation, pseudoinverse, norms and subspace distances.
//!
//! Flop counts are reported in real floating-point operations; a complex
//! multiply-add counts as eight.

mod norms;
mod qr;
mod svd;

pub use norms::{norms, spectral_norm, subspace_distance, tail_norm, Norms, PowerEstimate};
pub use qr::{orthonormal_basis, qr, qrp, random_orthonormal, QrpFactorization};
pub use svd::{numerical_rank, pinv_trunc, svd, truncate_svd, Pinv, TopSVD};

pub(crate) use qr::qrp_counted;
pub(crate) use svd::svd_counted;

use crate::Scalar;

/// Real flops of one multiply-add in field `T`.
#[inline]
pub(crate) fn fma_cost<T: Scalar>() -> u64 {
    if T::IS_COMPLEX {
        8
    } else {
        2
    }
}

/// Relative cutoff below which singular values count as zero when inverting.
pub const PINV_CUTOFF: f64 = 1e-12;
