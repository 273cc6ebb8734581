//! Two-sided sketching, generalized Nyström reconstruction, conversion of a
//! factored LRA to a top SVD, and rank-ρ recompression.

use crate::linalg::{fma_cost, pinv_trunc, qrp_counted, svd_counted, truncate_svd, Pinv, TopSVD, PINV_CUTOFF};
use crate::multipliers::{Multiplier, MultiplierConfig, Side};
use crate::{Error, Mat, MatrixOracle, Result, Scalar};

/// `M ≈ X·Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct LRA2<T = f64> {
    pub x: Mat<T>,
    pub y: Mat<T>,
}

impl<T: Scalar> LRA2<T> {
    pub fn new(x: Mat<T>, y: Mat<T>) -> Result<Self> {
        if x.cols() != y.rows() {
            return Err(Error::dim(alloc::format!(
                "LRA2 inner dimensions {} and {} differ",
                x.cols(),
                y.rows()
            )));
        }
        Ok(LRA2 { x, y })
    }

    pub fn rank(&self) -> usize {
        self.x.cols()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.x.rows(), self.y.cols())
    }

    pub fn reconstruct(&self) -> Mat<T> {
        self.x.matmul(&self.y)
    }
}

/// `M ≈ U·T·V`.
#[derive(Debug, Clone, PartialEq)]
pub struct LRA3<T = f64> {
    pub u: Mat<T>,
    pub t: Mat<T>,
    pub v: Mat<T>,
}

impl<T: Scalar> LRA3<T> {
    pub fn new(u: Mat<T>, t: Mat<T>, v: Mat<T>) -> Result<Self> {
        if u.cols() != t.rows() || t.cols() != v.rows() {
            return Err(Error::dim(alloc::format!(
                "LRA3 chain {:?}·{:?}·{:?}",
                u.shape(),
                t.shape(),
                v.shape()
            )));
        }
        Ok(LRA3 { u, t, v })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.u.rows(), self.v.cols())
    }

    /// Product `U·T·V`, associated so the small core is applied first.
    pub fn reconstruct(&self) -> Mat<T> {
        self.u.matmul(&self.t.matmul(&self.v))
    }

    /// Two-factor form `X = U·T`, `Y = V`.
    pub fn to_lra2(&self) -> LRA2<T> {
        LRA2 {
            x: self.u.matmul(&self.t),
            y: self.v.clone(),
        }
    }
}

/// Multiplier descriptors recorded with a sketch, when known.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Provenance {
    pub left: Option<MultiplierConfig>,
    pub right: Option<MultiplierConfig>,
}

/// `W = F·M`, `Y = M·H`, `Z = F·Y`.
#[derive(Debug, Clone)]
pub struct SketchSet<T = f64> {
    pub w: Mat<T>,
    pub y: Mat<T>,
    pub z: Mat<T>,
    pub provenance: Provenance,
    /// Distinct entries of `M` read by the oracle when the sketch finished.
    pub reads: u64,
    /// Real flops spent forming the three sketches.
    pub flops: u64,
}

impl<T: Scalar> SketchSet<T> {
    pub fn with_provenance(mut self, left: MultiplierConfig, right: MultiplierConfig) -> Self {
        self.provenance = Provenance {
            left: Some(left),
            right: Some(right),
        };
        self
    }
}

/// Forms the three sketches. `Z` is computed as `F·(M·H)` with no further reads.
pub fn sketch<T: Scalar>(o: &mut MatrixOracle, f: &Multiplier<T>, h: &Multiplier<T>) -> Result<SketchSet<T>> {
    if f.side() != Side::Left || h.side() != Side::Right {
        return Err(Error::arg("sketch needs a left F and a right H"));
    }
    if f.samples() == 0 || h.samples() == 0 {
        return Err(Error::arg("sketch sizes k and l must be at least 1"));
    }
    let (f0, h0) = (f.flops(), h.flops());
    let w = f.apply_left(o)?;
    let y = h.apply_right(o)?;
    let z = f.left_times(&y)?;
    Ok(SketchSet {
        w,
        y,
        z,
        provenance: Provenance::default(),
        reads: o.reads(),
        flops: f.flops() - f0 + h.flops() - h0,
    })
}

/// Generalized Nyström reconstruction `(M·H)·(F·M·H)_ρ⁺·(F·M)`.
///
/// The core keeps `min(rho, #{σ_j(Z) > 1e-12·σ₁(Z)})` singular values.
pub fn nystrom_reconstruct<T: Scalar>(s: &SketchSet<T>, rho: usize) -> Result<LRA3<T>> {
    let (k, l) = s.z.shape();
    if rho == 0 || rho > k.min(l) {
        return Err(Error::arg(alloc::format!("core rank {rho} outside 1..={}", k.min(l))));
    }
    let t = match pinv_trunc(&s.z, rho) {
        Ok(Pinv { mat, .. }) => mat,
        Err(Error::ZeroGenerator) => return Err(Error::SketchLostInput),
        Err(e) => return Err(e),
    };
    LRA3::new(s.y.clone(), t, s.w.clone())
}

/// Work record of one LRA → top-SVD conversion.
#[derive(Debug, Clone, PartialEq)]
pub struct ConversionReport {
    /// Real flops spent.
    pub flops: u64,
    /// Rank actually returned (the requested `r` unless a factor was deficient).
    pub rank: usize,
    /// Columns kept from the pivoted QR of `A` and of `Bᴴ`.
    pub kept: (usize, usize),
    /// Frobenius norms of the numerically zero QRP blocks dropped from `A` and `Bᴴ`.
    pub discarded: (f64, f64),
}

/// Relative tolerance for the numerical rank of the QRP factors.
const CONVERSION_RANK_TOL: f64 = 1e-12;

/// Top-`r` SVD of `A·W·B` from its factors.
///
/// Pivoted QR of `A` and of `Bᴴ` keep the columns above the numerical-rank
/// cutoff; the small core `R·Pᵀ·W·P'·R'ᴴ` is diagonalized, its singular vectors
/// are mapped back through the two `Q` factors and the result is truncated to
/// `r`. If either factor has numerical rank below `r`, a warning is logged and
/// `r` is lowered.
pub fn lra_to_topsvd<T: Scalar>(a: &Mat<T>, w: &Mat<T>, b: &Mat<T>, r: usize) -> Result<TopSVD<T>> {
    lra_to_topsvd_counted(a, w, b, r).map(|(s, _)| s)
}

/// [`lra_to_topsvd`] together with its flop count and trimming record.
pub fn lra_to_topsvd_counted<T: Scalar>(
    a: &Mat<T>,
    w: &Mat<T>,
    b: &Mat<T>,
    r: usize,
) -> Result<(TopSVD<T>, ConversionReport)> {
    convert(a, w, b, r, true)
}

fn convert<T: Scalar>(
    a: &Mat<T>,
    w: &Mat<T>,
    b: &Mat<T>,
    r: usize,
    warn: bool,
) -> Result<(TopSVD<T>, ConversionReport)> {
    let (m, l) = a.shape();
    let (k, n) = b.shape();
    if w.shape() != (l, k) {
        return Err(Error::dim(alloc::format!(
            "factors {:?}·{:?}·{:?} do not chain",
            a.shape(),
            w.shape(),
            b.shape()
        )));
    }
    if r == 0 || r > k.min(l) {
        return Err(Error::arg(alloc::format!("conversion rank {r} outside 1..={}", k.min(l))));
    }
    let fma = fma_cost::<T>();
    let mut flops = 0;
    let qa = qrp_counted(a, CONVERSION_RANK_TOL, usize::MAX, &mut flops)?;
    let qb = qrp_counted(&b.adjoint(), CONVERSION_RANK_TOL, usize::MAX, &mut flops)?;
    let (ka, kb) = (qa.numrank, qb.numrank);
    if ka == 0 || kb == 0 {
        return Err(Error::ZeroGenerator);
    }
    let discarded = (tail_rows_norm(&qa.r, ka), tail_rows_norm(&qb.r, kb));
    log::debug!("discarded QRP blocks: ‖A tail‖ = {:e}, ‖B tail‖ = {:e}", discarded.0, discarded.1);

    // R_a·Pᵀ (ka × l) and P'·R_bᴴ (k × kb), undoing the column pivots.
    let ra = unpivot_rows(&qa.r, &qa.perm, ka);
    let rb = unpivot_rows(&qb.r, &qb.perm, kb).adjoint();
    let x = ra.matmul(&w.matmul(&rb));
    flops += (l * k * kb + ka * l * kb) as u64 * fma;
    let core = svd_counted(&x, &mut flops)?;
    let avail = crate::linalg::numerical_rank(&core.sigma, CONVERSION_RANK_TOL).max(1);
    let r_eff = r.min(avail);
    if r_eff < r {
        if warn {
            log::warn!("requested rank {r} exceeds the numerical rank {avail} of the factors; truncating");
        } else {
            log::debug!("conversion rank lowered from {r} to {r_eff}");
        }
    }
    let core = truncate_svd(&core, r_eff)?;
    let u = qa.q.leading_cols(ka).matmul(&core.u);
    let v = qb.q.leading_cols(kb).matmul(&core.v);
    flops += (m * ka + n * kb) as u64 * r_eff as u64 * fma;
    Ok((
        TopSVD {
            u,
            sigma: core.sigma,
            v,
        },
        ConversionReport {
            flops,
            rank: r_eff,
            kept: (ka, kb),
            discarded,
        },
    ))
}

/// `R[..rows, :]` with its columns moved back to their original positions.
fn unpivot_rows<T: Scalar>(r: &Mat<T>, perm: &[usize], rows: usize) -> Mat<T> {
    let mut out = Mat::zeros(rows, r.cols());
    for i in 0..rows {
        for (j, &p) in perm.iter().enumerate() {
            out[(i, p)] = r[(i, j)];
        }
    }
    out
}

fn tail_rows_norm<T: Scalar>(r: &Mat<T>, from: usize) -> f64 {
    (from..r.rows())
        .flat_map(|i| r.row(i).iter().map(|x| x.abs2()))
        .sum::<f64>()
        .sqrt()
}

/// Rank-`rho` recompression of a three-factor LRA: top-`rho` SVD of `U·T·V`
/// in both SVD and two-factor (`X = UΣ`, `Y = Vᴴ`) form. If the LRA has
/// numerical rank below `rho`, the shorter SVD is returned.
pub fn recompress<T: Scalar>(lra: &LRA3<T>, rho: usize) -> Result<(LRA2<T>, TopSVD<T>)> {
    recompress_counted(lra, rho).map(|(x, s, _)| (x, s))
}

pub fn recompress_counted<T: Scalar>(lra: &LRA3<T>, rho: usize) -> Result<(LRA2<T>, TopSVD<T>, ConversionReport)> {
    let (s, report) = convert(&lra.u, &lra.t, &lra.v, rho, false)?;
    let x = s.u.scale_cols(&s.sigma);
    let lra2 = LRA2::new(x, s.v.adjoint())?;
    Ok((lra2, s, report))
}

/// Default sketch sizes `(k, l) = (4ρ + 2, 2ρ + 1)`.
pub fn default_oversampling(rho: usize) -> (usize, usize) {
    (4 * rho + 2, 2 * rho + 1)
}

/// Singular values of `Z` above the inversion cutoff, capped at `rho`.
pub fn effective_core_rank(sigma: &[f64], rho: usize) -> usize {
    let s1 = sigma.first().copied().unwrap_or(0.0);
    sigma.iter().take(rho).take_while(|&&s| s > PINV_CUTOFF * s1 && s > 0.0).count()
}
