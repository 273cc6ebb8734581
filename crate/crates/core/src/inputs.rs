//! Input families: adversarial δ-matrices, the dual random model
//! (random factors around a diagonal core plus noise) and matrices with a
//! prescribed decaying spectrum.

use alloc::vec::Vec;

use crate::linalg::{random_orthonormal, TopSVD};
use crate::rng::{gaussian, seeded, split_seed};
use crate::sketch::lra_to_topsvd;
use crate::{Error, Mat, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayKind {
    /// `σ_j = exp(−rate·j)`.
    Exp,
    /// `σ_j = j^(−rate)`.
    Poly,
}

/// Core spectrum of a dual random input.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum Spectrum {
    /// All ones.
    Flat,
    /// `σ_j = ratio^(j−1)`.
    Geometric { ratio: f64 },
    /// Explicit values, nonincreasing and positive.
    Values { values: Vec<f64> },
}

impl Spectrum {
    pub fn values(&self, rho: usize) -> Result<Vec<f64>> {
        let v = match self {
            Spectrum::Flat => alloc::vec![1.0; rho],
            Spectrum::Geometric { ratio } => {
                if !(*ratio > 0.0 && *ratio <= 1.0) {
                    return Err(Error::arg("geometric ratio must lie in (0, 1]"));
                }
                (0..rho).map(|j| ratio.powi(j as i32)).collect()
            }
            Spectrum::Values { values } => {
                if values.len() != rho {
                    return Err(Error::arg(alloc::format!(
                        "spectrum has {} values, rank is {rho}",
                        values.len()
                    )));
                }
                values.clone()
            }
        };
        check_spectrum(&v)?;
        Ok(v)
    }
}

/// Everything needed to regenerate an input bit for bit.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum InputSpec {
    Delta {
        m: usize,
        n: usize,
        i: usize,
        j: usize,
    },
    ShiftedDelta {
        m: usize,
        n: usize,
        i: usize,
        j: usize,
    },
    DualRandom {
        m: usize,
        n: usize,
        rho: usize,
        spectrum: Spectrum,
        #[serde(default)]
        noise: f64,
        seed: u64,
    },
    Decay {
        m: usize,
        n: usize,
        kind: DecayKind,
        rate: f64,
        seed: u64,
    },
}

/// A generated input and, when the family provides one, the top SVD of its
/// noiseless low-rank part.
#[derive(Debug, Clone)]
pub struct Generated {
    pub matrix: Mat,
    pub truth: Option<TopSVD>,
}

impl InputSpec {
    pub fn shape(&self) -> (usize, usize) {
        match *self {
            InputSpec::Delta { m, n, .. }
            | InputSpec::ShiftedDelta { m, n, .. }
            | InputSpec::DualRandom { m, n, .. }
            | InputSpec::Decay { m, n, .. } => (m, n),
        }
    }

    pub fn generate(&self) -> Result<Generated> {
        match self {
            &InputSpec::Delta { m, n, i, j } => Ok(Generated {
                matrix: delta_matrix(m, n, i, j)?,
                truth: None,
            }),
            &InputSpec::ShiftedDelta { m, n, i, j } => Ok(Generated {
                matrix: shifted_delta(m, n, i, j)?,
                truth: None,
            }),
            InputSpec::DualRandom {
                m,
                n,
                rho,
                spectrum,
                noise,
                seed,
            } => {
                let (matrix, truth) = dual_random(*m, *n, *rho, &spectrum.values(*rho)?, *noise, *seed)?;
                Ok(Generated {
                    matrix,
                    truth: Some(truth),
                })
            }
            &InputSpec::Decay { m, n, kind, rate, seed } => Ok(Generated {
                matrix: decay_matrix(m, n, kind, rate, seed)?,
                truth: None,
            }),
        }
    }
}

fn check_index(m: usize, n: usize, i: usize, j: usize) -> Result<()> {
    if i >= m || j >= n {
        return Err(Error::OutOfRange {
            row: i,
            col: j,
            rows: m,
            cols: n,
        });
    }
    Ok(())
}

/// Zero matrix with a single unit entry at `(i, j)`.
pub fn delta_matrix(m: usize, n: usize, i: usize, j: usize) -> Result<Mat> {
    check_index(m, n, i, j)?;
    let mut a = Mat::zeros(m, n);
    a[(i, j)] = 1.0;
    Ok(a)
}

/// `δ_ij − ½·𝟙𝟙ᵀ`: entry `(i, j)` is ½, every other entry −½.
pub fn shifted_delta(m: usize, n: usize, i: usize, j: usize) -> Result<Mat> {
    check_index(m, n, i, j)?;
    Ok(Mat::from_fn(m, n, |a, b| if (a, b) == (i, j) { 0.5 } else { -0.5 }))
}

fn check_spectrum(s: &[f64]) -> Result<()> {
    if s.iter().any(|&x| !(x > 0.0) || !x.is_finite()) || s.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::arg("spectrum must be positive and nonincreasing"));
    }
    Ok(())
}

/// `U·diag(spectrum)·V + E` with Gaussian `U` (`m × ρ`) and `V` (`ρ × n`)
/// scaled by `1/sqrt(m)` and `1/sqrt(n)`, and Gaussian noise scaled so that
/// `‖E‖_F = noise·‖U·diag·V‖_F`. Also returns the exact top SVD of the
/// noiseless part.
pub fn dual_random(m: usize, n: usize, rho: usize, spectrum: &[f64], noise: f64, seed: u64) -> Result<(Mat, TopSVD)> {
    if rho == 0 || rho > m.min(n) {
        return Err(Error::arg(alloc::format!("rank {rho} outside 1..={}", m.min(n))));
    }
    if spectrum.len() != rho {
        return Err(Error::arg("spectrum length must equal the rank"));
    }
    check_spectrum(spectrum)?;
    if !(noise >= 0.0) {
        return Err(Error::arg("noise level must be nonnegative"));
    }
    let mut rng = seeded(split_seed(seed, 0));
    let u = gaussian(m, rho, &mut rng).scale(1.0 / (m as f64).sqrt());
    let v = gaussian(rho, n, &mut rng).scale(1.0 / (n as f64).sqrt());
    let low = u.scale_cols(spectrum).matmul(&v);
    let truth = lra_to_topsvd(&u, &Mat::from_diag(spectrum), &v, rho)?;
    let matrix = if noise > 0.0 {
        let e = gaussian(m, n, &mut seeded(split_seed(seed, 1)));
        &low + &e.scale(noise * low.fro_norm() / e.fro_norm())
    } else {
        low
    };
    Ok((matrix, truth))
}

/// `Q₁·diag(σ)·Q₂ᵀ` for seeded orthonormal `Q₁` (`m × p`), `Q₂` (`n × p`),
/// where `p = σ.len()`.
pub fn spectrum_matrix(m: usize, n: usize, sigma: &[f64], seed: u64) -> Result<Mat> {
    let p = sigma.len();
    if p == 0 || p > m.min(n) {
        return Err(Error::arg(alloc::format!("spectrum length {p} outside 1..={}", m.min(n))));
    }
    if sigma.iter().any(|&s| !(s >= 0.0)) {
        return Err(Error::arg("singular values must be nonnegative"));
    }
    let q1 = random_orthonormal(m, p, &mut seeded(split_seed(seed, 0)));
    let q2 = random_orthonormal(n, p, &mut seeded(split_seed(seed, 1)));
    Ok(q1.scale_cols(sigma).matmul(&q2.transpose()))
}

/// Prescribed decay `σ_j`, `j = 1..min(m, n)`, between seeded orthogonal factors.
pub fn decay_matrix(m: usize, n: usize, kind: DecayKind, rate: f64, seed: u64) -> Result<Mat> {
    if !(rate > 0.0) {
        return Err(Error::arg("decay rate must be positive"));
    }
    spectrum_matrix(m, n, &decay_spectrum(m.min(n), kind, rate), seed)
}

pub fn decay_spectrum(p: usize, kind: DecayKind, rate: f64) -> Vec<f64> {
    (1..=p)
        .map(|j| match kind {
            DecayKind::Exp => (-rate * j as f64).exp(),
            DecayKind::Poly => (j as f64).powf(-rate),
        })
        .collect()
}
