use alloc::vec::Vec;

use rand::Rng;

use super::fma_cost;
use crate::{rng, Error, Mat, Result, Scalar};

/// Column-pivoted QR: `A[:, perm] = Q R`.
#[derive(Debug, Clone)]
pub struct QrpFactorization<T = f64> {
    /// `m × p` with orthonormal columns, `p = min(m, n)` unless fewer were requested.
    pub q: Mat<T>,
    /// `p × n` upper triangular.
    pub r: Mat<T>,
    /// `perm[j]` is the original index of the `j`-th pivoted column.
    pub perm: Vec<usize>,
    /// Number of leading diagonal entries with `|R[i,i]| > tol·|R[0,0]|`.
    pub numrank: usize,
}

impl<T: Scalar> QrpFactorization<T> {
    /// `A·P` as a matrix, i.e. the input with its columns permuted.
    pub fn permuted(a: &Mat<T>, perm: &[usize]) -> Mat<T> {
        a.select_cols(perm)
    }
}

const NORM_REFRESH: usize = 16;

struct Reflector<T> {
    start: usize,
    v: Vec<T>,
    beta: f64,
}

impl<T: Scalar> Reflector<T> {
    /// `x ← (I − β v vᴴ) x` on `x[start..]`.
    fn apply(&self, x: &mut [T]) {
        let tail = &mut x[self.start..];
        let s: T = self.v.iter().zip(tail.iter()).map(|(&v, &x)| v.conj() * x).sum();
        let s = s.scale(self.beta);
        for (xi, &vi) in tail.iter_mut().zip(&self.v) {
            *xi -= vi * s;
        }
    }
}

/// Shared Householder driver. `q_cols` limits how many columns of `Q` are formed.
fn householder<T: Scalar>(
    a: &Mat<T>,
    pivot: bool,
    q_cols: usize,
    flops: &mut u64,
) -> (Mat<T>, Mat<T>, Vec<usize>) {
    let (m, n) = a.shape();
    let p = m.min(n);
    let fma = fma_cost::<T>();
    let mut cols = a.to_cols();
    let mut perm: Vec<usize> = (0..n).collect();
    let col_norm2 = |c: &[T], from: usize| c[from..].iter().map(|x| x.abs2()).sum::<f64>();
    let mut norms2: Vec<f64> = cols.iter().map(|c| col_norm2(c, 0)).collect();
    let mut reflectors: Vec<Option<Reflector<T>>> = Vec::with_capacity(p);

    for k in 0..p {
        if pivot {
            if k > 0 && k % NORM_REFRESH == 0 {
                for j in k..n {
                    norms2[j] = col_norm2(&cols[j], k);
                }
                *flops += ((n - k) * (m - k)) as u64 * fma;
            }
            let mut best = k;
            for j in k + 1..n {
                if norms2[j] > norms2[best] {
                    best = j;
                }
            }
            if best != k {
                cols.swap(k, best);
                perm.swap(k, best);
                norms2.swap(k, best);
            }
        }

        let x = &cols[k][k..];
        let alpha = x.iter().map(|v| v.abs2()).sum::<f64>().sqrt();
        *flops += (m - k) as u64 * fma;
        if alpha == 0.0 {
            reflectors.push(None);
            continue;
        }
        let x0 = x[0];
        let mut v: Vec<T> = x.to_vec();
        v[0] += x0.phase().scale(alpha);
        let beta = 1.0 / (alpha * (alpha + x0.abs()));
        let refl = Reflector { start: k, v, beta };
        for (j, col) in cols.iter_mut().enumerate().skip(k) {
            if j == k {
                col[k] = -x0.phase().scale(alpha);
                for e in col[k + 1..].iter_mut() {
                    *e = T::zero();
                }
            } else {
                refl.apply(col);
            }
        }
        *flops += ((n - k - 1) * (m - k)) as u64 * 2 * fma;
        if pivot {
            for j in k + 1..n {
                norms2[j] -= cols[j][k].abs2();
                if norms2[j] < 0.0 {
                    norms2[j] = col_norm2(&cols[j], k + 1);
                }
            }
        }
        reflectors.push(Some(refl));
    }

    let r = Mat::from_fn(p, n, |i, j| if i <= j { cols[j][i] } else { T::zero() });

    let q_cols = q_cols.min(p);
    let mut qc: Vec<Vec<T>> = (0..q_cols)
        .map(|j| {
            let mut e = alloc::vec![T::zero(); m];
            e[j] = T::one();
            e
        })
        .collect();
    for refl in reflectors.iter().rev().flatten() {
        for c in qc.iter_mut() {
            refl.apply(c);
        }
        *flops += (q_cols * (m - refl.start)) as u64 * 2 * fma;
    }
    (Mat::from_cols(&qc), r, perm)
}

fn numrank_of<T: Scalar>(r: &Mat<T>, tol: f64) -> usize {
    let p = r.rows().min(r.cols());
    if p == 0 {
        return 0;
    }
    let r00 = r[(0, 0)].abs();
    if r00 == 0.0 {
        return 0;
    }
    (0..p)
        .rev()
        .find(|&i| r[(i, i)].abs() > tol * r00)
        .map_or(0, |i| i + 1)
}

/// Rank-revealing QR with classical column pivoting.
///
/// Remaining column norms are downdated after each step and recomputed every
/// 16 steps.
pub fn qrp<T: Scalar>(a: &Mat<T>, tol: f64) -> Result<QrpFactorization<T>> {
    let mut flops = 0;
    qrp_counted(a, tol, usize::MAX, &mut flops)
}

pub(crate) fn qrp_counted<T: Scalar>(
    a: &Mat<T>,
    tol: f64,
    q_cols: usize,
    flops: &mut u64,
) -> Result<QrpFactorization<T>> {
    if a.is_empty() {
        return Err(Error::Empty);
    }
    if !(tol >= 0.0) {
        return Err(Error::arg("qrp tolerance must be nonnegative"));
    }
    let (q, r, perm) = householder(a, true, q_cols, flops);
    let numrank = numrank_of(&r, tol);
    Ok(QrpFactorization { q, r, perm, numrank })
}

/// Thin Householder QR without pivoting: `A = Q R`.
pub fn qr<T: Scalar>(a: &Mat<T>) -> Result<(Mat<T>, Mat<T>)> {
    if a.is_empty() {
        return Err(Error::Empty);
    }
    let mut flops = 0;
    let (q, r, _) = householder(a, false, usize::MAX, &mut flops);
    Ok((q, r))
}

/// Orthonormal basis (`Q` factor) of the columns of `a`.
pub fn orthonormal_basis<T: Scalar>(a: &Mat<T>) -> Result<Mat<T>> {
    qr(a).map(|(q, _)| q)
}

/// Seeded `m × r` matrix with orthonormal columns (QR of a Gaussian matrix).
pub fn random_orthonormal(m: usize, r: usize, rng: &mut impl Rng) -> Mat {
    assert!(r <= m && r > 0, "random_orthonormal needs 0 < r <= m");
    let g = rng::gaussian(m, r, rng);
    let (q, rr) = qr(&g).expect("non-empty");
    // Fix signs so the factor is Haar distributed.
    let signs: Vec<f64> = (0..r).map(|j| rr[(j, j)].signum()).collect();
    q.scale_cols(&signs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::svd;
    use crate::rng::seeded;
    use crate::Complex64;

    fn residual<T: Scalar>(a: &Mat<T>, f: &QrpFactorization<T>) -> f64 {
        (&a.select_cols(&f.perm) - &(&f.q * &f.r)).fro_norm()
    }

    #[test]
    fn identity_factorizes_to_itself() {
        let f = qrp(&Mat::<f64>::identity(3), 1e-8).unwrap();
        assert_eq!(f.numrank, 3);
        for i in 0..3 {
            assert!((f.r[(i, i)].abs() - 1.0).abs() < 1e-15);
            assert!((f.q[(i, i)].abs() - 1.0).abs() < 1e-15);
        }
        assert!(residual(&Mat::identity(3), &f) < 1e-15);
    }

    #[test]
    fn rank_one_outer_product() {
        let mut rng = seeded(11);
        let u = crate::rng::gaussian(4, 1, &mut rng);
        let v = crate::rng::gaussian(1, 4, &mut rng);
        let a = &u * &v;
        let f = qrp(&a, 1e-8).unwrap();
        assert_eq!(f.numrank, 1);
        assert!(f.r[(1, 1)].abs() <= 1e-10 * f.r[(0, 0)].abs());
        assert!(residual(&a, &f) <= 1e-10 * a.fro_norm());
    }

    #[test]
    fn near_singular_two_by_two() {
        let a = Mat::from_rows(&[[1.0, 1.0], [1.0, 1.0 + 1e-12]]);
        let f = qrp(&a, 1e-8).unwrap();
        assert_eq!(f.numrank, 1);
        let s = svd(&a).unwrap();
        let svd_rank = s.sigma.iter().filter(|&&x| x > 1e-8 * s.sigma[0]).count();
        assert_eq!(svd_rank, f.numrank);
    }

    #[test]
    fn empty_and_bad_tolerance_rejected() {
        assert_eq!(qrp(&Mat::<f64>::zeros(0, 3), 0.0).unwrap_err(), Error::Empty);
        assert!(qrp(&Mat::<f64>::identity(2), -1.0).is_err());
    }

    #[test]
    fn pivoted_diagonal_is_nonincreasing() {
        let mut rng = seeded(3);
        for &(m, n) in &[(7, 5), (5, 9), (40, 40), (33, 20)] {
            let a = crate::rng::gaussian(m, n, &mut rng);
            let f = qrp(&a, 0.0).unwrap();
            assert!(residual(&a, &f) <= 1e-12 * a.fro_norm());
            assert!(f.q.orthonormality_defect() < 1e-12);
            for i in 1..m.min(n) {
                assert!(f.r[(i, i)].abs() <= f.r[(i - 1, i - 1)].abs() * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn complex_qrp() {
        let mut rng = seeded(5);
        let re = crate::rng::gaussian(6, 4, &mut rng);
        let im = crate::rng::gaussian(6, 4, &mut rng);
        let a = Mat::from_fn(6, 4, |i, j| Complex64::new(re[(i, j)], im[(i, j)]));
        let f = qrp(&a, 1e-12).unwrap();
        assert_eq!(f.numrank, 4);
        assert!(residual(&a, &f) <= 1e-12 * a.fro_norm());
        assert!(f.q.orthonormality_defect() < 1e-12);
    }

    #[test]
    fn numrank_matches_diagonal_spectrum() {
        let spectra: [&[f64]; 3] = [&[5.0, 1.0, 1e-9, 0.0], &[1.0, 0.5, 0.25], &[3.0, 1e-3, 1e-7, 1e-12]];
        let tol = 1e-6;
        for s in spectra {
            let f = qrp(&Mat::<f64>::from_diag(s), tol).unwrap();
            let expect = s.iter().filter(|&&x| x > tol * s[0]).count();
            assert_eq!(f.numrank, expect, "{s:?}");
        }
    }
}
