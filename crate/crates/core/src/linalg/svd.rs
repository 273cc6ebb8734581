use alloc::vec;
use alloc::vec::Vec;


use super::{fma_cost, PINV_CUTOFF};
use crate::{Error, Mat, Result, Scalar};

const MAX_SWEEPS: usize = 60;
const JACOBI_TOL: f64 = 1e-14;

/// Compact SVD `A ≈ U·diag(sigma)·Vᴴ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TopSVD<T = f64> {
    /// `m × r`, orthonormal columns.
    pub u: Mat<T>,
    /// Nonincreasing, nonnegative.
    pub sigma: Vec<f64>,
    /// `n × r`, orthonormal columns.
    pub v: Mat<T>,
}

impl<T: Scalar> TopSVD<T> {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.u.rows(), self.v.rows())
    }

    /// `U·diag(sigma)·Vᴴ`.
    pub fn reconstruct(&self) -> Mat<T> {
        self.u.scale_cols(&self.sigma).matmul(&self.v.adjoint())
    }

    /// Entry `(i, j)` of the reconstruction, in `O(r)`.
    pub fn entry(&self, i: usize, j: usize) -> T {
        (0..self.rank())
            .map(|t| self.u[(i, t)] * self.v[(j, t)].conj().scale(self.sigma[t]))
            .sum()
    }

    /// Leading `rho` triplets. See [`truncate_svd`].
    pub fn truncate(&self, rho: usize) -> Result<Self> {
        truncate_svd(self, rho)
    }

    /// Checks the orthonormality and ordering invariants.
    pub fn check(&self, tol: f64) -> bool {
        let r = self.rank().max(1) as f64;
        self.u.orthonormality_defect() <= tol * r
            && self.v.orthonormality_defect() <= tol * r
            && self.sigma.windows(2).all(|w| w[0] >= w[1])
            && self.sigma.iter().all(|&s| s >= 0.0)
    }
}

/// Singular values above `rel_tol·σ₁`.
pub fn numerical_rank(sigma: &[f64], rel_tol: f64) -> usize {
    match sigma.first() {
        Some(&s1) if s1 > 0.0 => sigma.iter().filter(|&&s| s > rel_tol * s1).count(),
        _ => 0,
    }
}

/// One-sided Jacobi SVD with cyclic sweeps.
///
/// Returns `r = min(m, n)` triplets. Fails with [`Error::NoConvergence`] after
/// 60 sweeps rather than returning a partial result.
pub fn svd<T: Scalar>(a: &Mat<T>) -> Result<TopSVD<T>> {
    let mut flops = 0;
    svd_counted(a, &mut flops)
}

pub(crate) fn svd_counted<T: Scalar>(a: &Mat<T>, flops: &mut u64) -> Result<TopSVD<T>> {
    if a.is_empty() {
        return Err(Error::Empty);
    }
    if a.as_slice().iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    if a.rows() < a.cols() {
        let t = jacobi(&a.adjoint(), flops)?;
        return Ok(TopSVD {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        });
    }
    jacobi(a, flops)
}

/// Tall case, `m ≥ n`.
fn jacobi<T: Scalar>(a: &Mat<T>, flops: &mut u64) -> Result<TopSVD<T>> {
    let (m, n) = a.shape();
    let fma = fma_cost::<T>();
    let mut w = a.to_cols();
    let mut v: Vec<Vec<T>> = (0..n)
        .map(|j| {
            let mut e = vec![T::zero(); n];
            e[j] = T::one();
            e
        })
        .collect();
    let tol = JACOBI_TOL.max(m as f64 * f64::EPSILON);
    // Columns at rounding level relative to ‖A‖_F carry no direction; rotating
    // them against each other only chases noise and can stall convergence.
    let fro2: f64 = w.iter().flatten().map(|x| x.abs2()).sum();
    let negligible = (m as f64 * f64::EPSILON).powi(2) * fro2;

    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let (wp, wq) = pair(&mut w, p, q);
                let alpha: f64 = wp.iter().map(|x| x.abs2()).sum();
                let beta: f64 = wq.iter().map(|x| x.abs2()).sum();
                let gamma: T = wp.iter().zip(wq.iter()).map(|(&x, &y)| x.conj() * y).sum();
                *flops += 3 * m as u64 * fma;
                let g = gamma.abs();
                if alpha <= negligible || beta <= negligible || g <= tol * alpha.sqrt() * beta.sqrt() {
                    continue;
                }
                rotated = true;
                let e = gamma.scale(1.0 / g);
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(wp, wq, c, s, e);
                let (vp, vq) = pair(&mut v, p, q);
                rotate(vp, vq, c, s, e);
                *flops += 3 * (m + n) as u64 * fma;
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let norms: Vec<f64> = w
        .iter()
        .map(|c| c.iter().map(|x| x.abs2()).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap_or(core::cmp::Ordering::Equal));

    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let mut ucols: Vec<Vec<T>> = Vec::with_capacity(n);
    for &j in &order {
        let s = norms[j];
        let candidate = if s > 0.0 {
            Some(w[j].iter().map(|x| x.scale(1.0 / s)).collect())
        } else {
            None
        };
        let u = orthonormal_against(&ucols, candidate, m);
        ucols.push(u);
    }
    let vcols: Vec<Vec<T>> = order.iter().map(|&j| v[j].clone()).collect();
    Ok(TopSVD {
        u: Mat::from_cols(&ucols),
        sigma,
        v: Mat::from_cols(&vcols),
    })
}

fn pair<T>(cols: &mut [Vec<T>], p: usize, q: usize) -> (&mut [T], &mut [T]) {
    debug_assert!(p < q);
    let (lo, hi) = cols.split_at_mut(q);
    (&mut lo[p], &mut hi[0])
}

/// `x ← c·x − s·ē·y`, `y ← s·e·x + c·y`.
#[inline]
fn rotate<T: Scalar>(x: &mut [T], y: &mut [T], c: f64, s: f64, e: T) {
    let se = e.scale(s);
    let sec = se.conj();
    for (xi, yi) in x.iter_mut().zip(y.iter_mut()) {
        let a = *xi;
        let b = *yi;
        *xi = a.scale(c) - sec * b;
        *yi = se * a + b.scale(c);
    }
}

/// Re-orthogonalizes a candidate column against `basis`; falls back to the
/// coordinate vector with the largest residual when the candidate is missing or
/// has lost its direction.
fn orthonormal_against<T: Scalar>(basis: &[Vec<T>], candidate: Option<Vec<T>>, m: usize) -> Vec<T> {
    if let Some(mut u) = candidate {
        project_out(basis, &mut u);
        let nrm = norm(&u);
        if nrm > 0.5 {
            u.iter_mut().for_each(|x| *x = x.scale(1.0 / nrm));
            return u;
        }
    }
    let mut best: Option<(f64, Vec<T>)> = None;
    for i in 0..m {
        let mut e = vec![T::zero(); m];
        e[i] = T::one();
        project_out(basis, &mut e);
        project_out(basis, &mut e);
        let nrm = norm(&e);
        if best.as_ref().is_none_or(|(b, _)| nrm > *b) {
            best = Some((nrm, e));
        }
        if nrm > 0.7 {
            break;
        }
    }
    let (nrm, mut e) = best.expect("m > basis.len()");
    e.iter_mut().for_each(|x| *x = x.scale(1.0 / nrm));
    e
}

fn project_out<T: Scalar>(basis: &[Vec<T>], u: &mut [T]) {
    for b in basis {
        let d: T = b.iter().zip(u.iter()).map(|(&bi, &ui)| bi.conj() * ui).sum();
        for (ui, &bi) in u.iter_mut().zip(b) {
            *ui -= bi * d;
        }
    }
}

fn norm<T: Scalar>(u: &[T]) -> f64 {
    u.iter().map(|x| x.abs2()).sum::<f64>().sqrt()
}

/// Leading `rho` singular triplets. `rho = 0` is refused.
pub fn truncate_svd<T: Scalar>(s: &TopSVD<T>, rho: usize) -> Result<TopSVD<T>> {
    if rho == 0 {
        return Err(Error::arg("truncation rank must be positive"));
    }
    if rho > s.rank() {
        return Err(Error::arg(alloc::format!(
            "truncation rank {rho} exceeds available rank {}",
            s.rank()
        )));
    }
    Ok(TopSVD {
        u: s.u.leading_cols(rho),
        sigma: s.sigma[..rho].to_vec(),
        v: s.v.leading_cols(rho),
    })
}

/// Truncated pseudoinverse with its effective rank.
#[derive(Debug, Clone)]
pub struct Pinv<T = f64> {
    pub mat: Mat<T>,
    /// Singular values actually inverted (≤ the requested rank).
    pub rank: usize,
}

/// `V_ρ·diag(1/σ)·U_ρᴴ` of the `rho`-truncated SVD of `g`.
///
/// Singular values below `1e-12·σ₁` are dropped even inside the leading `rho`.
pub fn pinv_trunc<T: Scalar>(g: &Mat<T>, rho: usize) -> Result<Pinv<T>> {
    let mut flops = 0;
    pinv_trunc_counted(g, rho, &mut flops)
}

pub(crate) fn pinv_trunc_counted<T: Scalar>(g: &Mat<T>, rho: usize, flops: &mut u64) -> Result<Pinv<T>> {
    if rho == 0 || rho > g.rows().min(g.cols()) {
        return Err(Error::arg(alloc::format!(
            "pinv rank {rho} outside 1..={}",
            g.rows().min(g.cols())
        )));
    }
    let s = svd_counted(g, flops)?;
    pinv_from_svd(&s, rho, flops)
}

pub(crate) fn pinv_from_svd<T: Scalar>(s: &TopSVD<T>, rho: usize, flops: &mut u64) -> Result<Pinv<T>> {
    let s1 = s.sigma.first().copied().unwrap_or(0.0);
    let rank = s.sigma[..rho.min(s.rank())]
        .iter()
        .take_while(|&&x| x > PINV_CUTOFF * s1 && x > 0.0)
        .count();
    if rank == 0 {
        return Err(Error::ZeroGenerator);
    }
    let inv: Vec<f64> = s.sigma[..rank].iter().map(|x| 1.0 / x).collect();
    let vr = s.v.leading_cols(rank).scale_cols(&inv);
    let ur = s.u.leading_cols(rank);
    let mat = vr.matmul(&ur.adjoint());
    *flops += (vr.rows() * ur.rows() * rank) as u64 * fma_cost::<T>();
    Ok(Pinv { mat, rank })
}
