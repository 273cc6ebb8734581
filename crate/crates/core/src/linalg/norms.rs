use alloc::vec::Vec;


use super::svd;
use crate::{rng, Error, Mat, Result, Scalar};

const POWER_MAX_ITERS: usize = 300;
const POWER_TOL: f64 = 1e-10;
const POWER_SEED: u64 = 0x5eed_5eed;

/// Result of a power-iteration estimate of `σ₁`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerEstimate {
    pub value: f64,
    pub iterations: usize,
    /// `false` when the 300-iteration cap was hit; `value` is then the last
    /// Rayleigh estimate.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub frobenius: f64,
    pub spectral: f64,
    pub spectral_converged: bool,
}

pub fn norms<T: Scalar>(a: &Mat<T>) -> Norms {
    let p = spectral_norm(a);
    Norms {
        frobenius: a.fro_norm(),
        spectral: p.value,
        spectral_converged: p.converged,
    }
}

/// `σ₁(A)` by power iteration on `AᴴA` from a fixed seeded start vector.
pub fn spectral_norm<T: Scalar>(a: &Mat<T>) -> PowerEstimate {
    let n = a.cols();
    if a.is_empty() || a.max_abs() == 0.0 {
        return PowerEstimate {
            value: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    let mut r = rng::seeded(POWER_SEED);
    let mut v: Vec<T> = (0..n).map(|_| T::from_real(rng::standard_normal(&mut r))).collect();
    normalize(&mut v);
    let ah = a.adjoint();
    let mut est = 0.0;
    for it in 1..=POWER_MAX_ITERS {
        let w = a.mul_vec(&v);
        let next = vec_norm(&w);
        let mut z = ah.mul_vec(&w);
        let done = (next - est).abs() <= POWER_TOL * next;
        est = next;
        if done || normalize(&mut z) == 0.0 {
            return PowerEstimate {
                value: est,
                iterations: it,
                converged: true,
            };
        }
        v = z;
    }
    PowerEstimate {
        value: est,
        iterations: POWER_MAX_ITERS,
        converged: false,
    }
}

fn vec_norm<T: Scalar>(x: &[T]) -> f64 {
    x.iter().map(|v| v.abs2()).sum::<f64>().sqrt()
}

fn normalize<T: Scalar>(x: &mut [T]) -> f64 {
    let n = vec_norm(x);
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v = v.scale(1.0 / n));
    }
    n
}

/// `sqrt(Σ_{j ≥ rho} σ_j²)` with zero-based `j`, i.e. the Frobenius error of
/// the best rank-`rho` approximation. A `rho` past the end yields zero.
pub fn tail_norm(sigma: &[f64], rho: usize) -> f64 {
    sigma.iter().skip(rho).map(|s| s * s).sum::<f64>().sqrt()
}

/// `min_Ω ‖B1·Ω − B2‖_F` over unitary `Ω` (orthogonal Procrustes).
///
/// With `B1ᴴB2 = UΣWᴴ` the minimizer is `Ω = UWᴴ`; the distance is evaluated
/// explicitly rather than through `2r − 2Σσ` to avoid cancellation near zero.
pub fn subspace_distance<T: Scalar>(b1: &Mat<T>, b2: &Mat<T>) -> Result<f64> {
    if b1.shape() != b2.shape() {
        return Err(Error::dim(alloc::format!(
            "subspace bases {:?} vs {:?}",
            b1.shape(),
            b2.shape()
        )));
    }
    if b1.is_empty() {
        return Ok(0.0);
    }
    let s = svd(&b1.adjoint_mul(b2))?;
    let omega = s.u.matmul(&s.v.adjoint());
    Ok((&b1.matmul(&omega) - b2).fro_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_orthonormal, svd};
    use crate::rng::{gaussian, seeded};

    #[test]
    fn trivial_norms() {
        let z = norms(&Mat::<f64>::zeros(3, 3));
        assert_eq!((z.frobenius, z.spectral), (0.0, 0.0));
        let i = norms(&Mat::<f64>::identity(4));
        assert!((i.frobenius - 2.0).abs() < 1e-15);
        assert!((i.spectral - 1.0).abs() < 1e-15);
    }

    #[test]
    fn spectral_matches_svd() {
        let mut rng = seeded(55);
        let a = gaussian(5, 5, &mut rng);
        let p = spectral_norm(&a);
        let s1 = svd(&a).unwrap().sigma[0];
        assert!(p.converged);
        assert!((p.value - s1).abs() <= 1e-8 * s1, "{} vs {}", p.value, s1);
    }

    #[test]
    fn tail_norm_cases() {
        let s = [3.0, 2.0, 1.0];
        assert!((tail_norm(&s, 0) - 14f64.sqrt()).abs() < 1e-15);
        assert_eq!(tail_norm(&s, 3), 0.0);
        assert!((tail_norm(&s, 1) - 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn subspace_distance_cases() {
        let mut rng = seeded(4);
        let b = random_orthonormal(6, 3, &mut rng);
        assert!(subspace_distance(&b, &b).unwrap() < 1e-12);
        let omega = random_orthonormal(3, 3, &mut rng);
        assert!(subspace_distance(&b, &b.matmul(&omega)).unwrap() < 1e-10);

        let i4 = Mat::<f64>::identity(4);
        let d = subspace_distance(&i4.select_cols(&[0, 1]), &i4.select_cols(&[2, 3])).unwrap();
        assert!((d - 2.0).abs() < 1e-14);

        assert!(subspace_distance(&b, &i4).is_err());
    }

    #[test]
    fn procrustes_beats_sampled_rotations() {
        // Brute force over random orthogonal Ω never beats the closed form.
        let mut rng = seeded(12);
        let b1 = random_orthonormal(5, 2, &mut rng);
        let b2 = random_orthonormal(5, 2, &mut rng);
        let d = subspace_distance(&b1, &b2).unwrap();
        for _ in 0..500 {
            let om = random_orthonormal(2, 2, &mut rng);
            assert!((&b1.matmul(&om) - &b2).fro_norm() >= d - 1e-12);
        }
    }
}
