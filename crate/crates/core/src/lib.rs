//! Sublinear-cost low-rank approximation.
//!
//! Every algorithm reads its input through a [`MatrixOracle`], which counts the
//! distinct entries it hands out, so "superfast" is something the tests measure
//! rather than assume. The crate is `no_std` and only needs `alloc`.
//!
//! Pipeline in brief:
//!
//! * [`multipliers`] builds structured sparse multipliers (abridged Hadamard and
//!   Fourier butterflies, bidiagonal/permutation chains, Givens and Householder
//!   partial products) plus dense Gaussian baselines.
//! * [`sketch`] forms `FM`, `MH`, `FMH`, reconstructs the generalized Nystrom
//!   approximation `(MH)(FMH)^+_rho(FM)` and converts factored approximations
//!   into a truncated SVD.
//! * [`cur`] builds canonical CUR decompositions and picks CUR index sets from
//!   an SVD.
//! * [`refine`] holds the refinement recipes and homotopy continuation.
//! * [`inputs`] generates adversarial and random test inputs.

#![no_std]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod cur;
mod error;
pub mod inputs;
pub mod linalg;
mod mat;
pub mod multipliers;
pub mod oracle;
pub mod refine;
pub mod rng;
mod scalar;
pub mod sketch;

pub use error::{Error, Result};
pub use mat::Mat;
pub use oracle::{AccessReport, MatrixOracle};
pub use scalar::{Complex64, Scalar};
