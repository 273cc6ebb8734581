//! CUR approximations `M ≈ C·U·R` built from actual rows and columns of `M`.

use alloc::vec::Vec;

use crate::linalg::{pinv_trunc, qrp, svd, Pinv, TopSVD, PINV_CUTOFF};
use crate::{Error, Mat, MatrixOracle, Result};

/// `C = M[:, col_idx]`, `R = M[row_idx, :]`, nucleus `l × k`.
///
/// `row_scale`/`col_scale` are set by sampling-based builders that reweight
/// the selected lines; the canonical form leaves them empty.
#[derive(Debug, Clone, PartialEq)]
pub struct CURDecomp {
    pub row_idx: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub c: Mat,
    pub nucleus: Mat,
    pub r: Mat,
    pub rho: usize,
    pub row_scale: Option<Vec<f64>>,
    pub col_scale: Option<Vec<f64>>,
}

impl CURDecomp {
    /// `C·nucleus·R`.
    pub fn reconstruct(&self) -> Mat {
        self.c.matmul(&self.nucleus.matmul(&self.r))
    }

    /// The `k × l` generator `G = M[row_idx, col_idx]`, taken from `C`.
    pub fn generator(&self) -> Mat {
        self.c.select_rows(&self.row_idx)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.c.rows(), self.r.cols())
    }
}

/// Canonical CUR with nucleus `G_ρ⁺`.
///
/// Reads exactly the entries of `C` and `R`; fails with
/// [`Error::RankDeficientGenerator`] when `σ_ρ(G)` is below `1e-12·σ₁(G)`.
pub fn canonical_cur(o: &mut MatrixOracle, row_idx: &[usize], col_idx: &[usize], rho: usize) -> Result<CURDecomp> {
    if rho == 0 {
        return Err(Error::arg("CUR rank must be positive"));
    }
    if row_idx.len() < rho || col_idx.len() < rho {
        return Err(Error::arg(alloc::format!(
            "CUR rank {rho} needs at least that many rows and columns (got {} and {})",
            row_idx.len(),
            col_idx.len()
        )));
    }
    let c = o.read_cols(col_idx)?;
    let r = o.read_rows(row_idx)?;
    let g = c.select_rows(row_idx);
    let nucleus = generator_pinv(&g, rho)?;
    Ok(CURDecomp {
        row_idx: row_idx.to_vec(),
        col_idx: col_idx.to_vec(),
        c,
        nucleus,
        r,
        rho,
        row_scale: None,
        col_scale: None,
    })
}

/// `G_ρ⁺`, refusing generators whose `ρ`-th singular value is below the cutoff.
pub(crate) fn generator_pinv(g: &Mat, rho: usize) -> Result<Mat> {
    let s = svd(g)?;
    let s1 = s.sigma.first().copied().unwrap_or(0.0);
    let srho = s.sigma.get(rho - 1).copied().unwrap_or(0.0);
    if s1 == 0.0 || srho <= PINV_CUTOFF * s1 {
        return Err(Error::RankDeficientGenerator { rho, sigma: srho });
    }
    let Pinv { mat, .. } = pinv_trunc(g, rho)?;
    Ok(mat)
}

/// `(exact, ‖M − C·U·R‖_F)` with `exact` meaning an error of at most
/// `1e-8·‖M‖_F`. A zero matrix is rejected.
pub fn verify_cur_exactness(m: &Mat, c: &CURDecomp) -> Result<(bool, f64)> {
    if c.shape() != m.shape() {
        return Err(Error::dim("CUR and matrix shapes differ"));
    }
    let norm = m.fro_norm();
    if norm == 0.0 {
        return Err(Error::arg("exactness is undefined for the zero matrix (rank 0)"));
    }
    let err = (m - &c.reconstruct()).fro_norm();
    Ok((err <= 1e-8 * norm, err))
}

/// Skeleton chosen from a top SVD.
#[derive(Debug, Clone, PartialEq)]
pub struct CurSelection {
    /// Sorted row indices.
    pub rows: Vec<usize>,
    /// Sorted column indices.
    pub cols: Vec<usize>,
    /// `‖G⁻¹‖₂·σ_ρ` for the selected `ρ × ρ` generator of `U·Σ·Vᴴ`.
    pub quality: f64,
    /// False if either volume-maximization search hit its swap cap.
    pub converged: bool,
}

const MAXVOL_GROWTH: f64 = 1.01;
const MAXVOL_CAP: usize = 50;

/// Selects `rho` rows and columns of `M′ = U·Σ·Vᴴ` from its factors alone by
/// volume maximization on `U_ρ` and `V_ρ`.
pub fn topsvd_to_cur(s: &TopSVD, rho: usize) -> Result<CurSelection> {
    if rho == 0 || rho > s.rank() {
        return Err(Error::arg(alloc::format!("selection rank {rho} outside 1..={}", s.rank())));
    }
    let u = s.u.leading_cols(rho);
    let v = s.v.leading_cols(rho);
    let (rows, rc) = maxvol(&u)?;
    let (cols, cc) = maxvol(&v)?;
    let g = Mat::from_fn(rho, rho, |a, b| {
        (0..rho).map(|t| u[(rows[a], t)] * s.sigma[t] * v[(cols[b], t)]).sum::<f64>()
    });
    let gs = svd(&g)?.sigma;
    let smin = gs[rho - 1];
    let quality = if smin > 0.0 { s.sigma[rho - 1] / smin } else { f64::INFINITY };
    log::debug!("CUR selection quality ‖G⁻¹‖·σ_ρ = {quality:.3}");
    Ok(CurSelection {
        rows,
        cols,
        quality,
        converged: rc && cc,
    })
}

/// Rows of a tall `m × r` matrix spanning a (locally) maximal-volume
/// `r × r` submatrix. Starts from the pivots of a QRP of `aᵀ` and swaps
/// while some coefficient of `a·a[I]⁻¹` exceeds the growth tolerance.
fn maxvol(a: &Mat) -> Result<(Vec<usize>, bool)> {
    let (m, r) = a.shape();
    let mut idx: Vec<usize> = qrp(&a.transpose(), 0.0)?.perm[..r].to_vec();
    let mut converged = false;
    for _ in 0..MAXVOL_CAP {
        let Pinv { mat: inv, rank } = pinv_trunc(&a.select_rows(&idx), r)?;
        if rank < r {
            return Err(Error::RankDeficientGenerator { rho: r, sigma: 0.0 });
        }
        let b = a.matmul(&inv);
        let (mut bi, mut bj, mut best) = (0, 0, 0.0);
        for i in 0..m {
            for j in 0..r {
                let x = b[(i, j)].abs();
                if x > best {
                    (bi, bj, best) = (i, j, x);
                }
            }
        }
        if best <= MAXVOL_GROWTH {
            converged = true;
            break;
        }
        idx[bj] = bi;
    }
    if !converged {
        log::warn!("maxvol hit its swap cap of {MAXVOL_CAP}");
    }
    idx.sort_unstable();
    Ok((idx, converged))
}

#[cfg(test)]
mod tests;
