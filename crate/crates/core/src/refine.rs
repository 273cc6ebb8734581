//! Refinement of a rank-ρ approximation: re-sketching with the approximant's
//! singular vectors, leverage-score CUR, residual correction with reused
//! multipliers, and homotopy continuation wrapping any of the three.

use alloc::vec::Vec;

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::seq::index;

use crate::cur::{generator_pinv, CURDecomp};
use crate::linalg::{svd, truncate_svd, TopSVD, PINV_CUTOFF};
use crate::multipliers::{gen_orthogonal_partial, neumaier, Flags, Multiplier, OrthogonalKind, Side};
use crate::rng::{seeded, split_seed};
use crate::sketch::{default_oversampling, lra_to_topsvd, nystrom_reconstruct, recompress, sketch, SketchSet};
use crate::{Error, Mat, MatrixOracle, Result};

/// Which refinement recipe to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recipe {
    /// Re-sketch with `F = Uᵀ`, `H = V`.
    Deterministic,
    /// Leverage-score CUR from the approximant's singular vectors.
    Leverage,
    /// Rank-2ρ correction of the residual with reused multipliers.
    Residual,
}

/// One line of a refinement trace.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    /// Error estimate `e_i` (nonnegative).
    pub error_estimate: f64,
    /// Gap estimate `g_i`; zero when not computed.
    pub gap: f64,
    /// Path step `s_i`; 1 outside homotopy.
    pub step: f64,
    /// Distinct entries of `M` read so far.
    pub reads: u64,
}

/// Refinement driver state.
#[derive(Debug, Clone)]
pub struct RefineState {
    /// Current rank-ρ approximant.
    pub current: TopSVD,
    pub rho: usize,
    pub f: Multiplier,
    pub h: Multiplier,
    /// Sketches `F·T`, `T·H`, `F·T·H` of the current target `T` (`M` itself
    /// outside homotopy).
    pub target: SketchSet,
    pub history: Vec<TraceEntry>,
    /// Error estimate decreased by less than 1% over the last three passes.
    pub stagnated: bool,
    /// Some homotopy step found a nonpositive gap and fell back to the minimum step.
    pub no_gap: bool,
    /// Path weight `c` with target `(1 − c)·M̃₀ + c·M`.
    pub path_weight: f64,
}

impl RefineState {
    /// Sketches `M` once with the given multipliers; later residual passes
    /// reuse these sketches and read nothing new.
    pub fn new(o: &mut MatrixOracle, current: TopSVD, rho: usize, f: Multiplier, h: Multiplier) -> Result<Self> {
        check_start(&current, rho, o.shape())?;
        let (k, l) = (f.samples(), h.samples());
        if k.min(l) < 2 * rho {
            return Err(Error::arg(alloc::format!(
                "residual sketches need k, l ≥ 2ρ = {} (got {k}, {l})",
                2 * rho
            )));
        }
        let target = sketch(o, &f, &h)?;
        let current = truncate_svd(&current, rho)?;
        Ok(RefineState {
            current,
            rho,
            f,
            h,
            target,
            history: Vec::new(),
            stagnated: false,
            no_gap: false,
            path_weight: 1.0,
        })
    }

    /// Default Gaussian multipliers sized for the rank-2ρ residual.
    pub fn with_gaussian(o: &mut MatrixOracle, current: TopSVD, rho: usize, seed: u64) -> Result<Self> {
        let (k, l) = default_oversampling(2 * rho);
        let (m, n) = o.shape();
        let f = Multiplier::dense(crate::multipliers::gen_gaussian(k.min(m), m, split_seed(seed, 0)), Side::Left);
        let h = Multiplier::dense(
            crate::multipliers::gen_gaussian(l.min(n), n, split_seed(seed, 1)).transpose(),
            Side::Right,
        );
        RefineState::new(o, current, rho, f, h)
    }

    pub fn error_estimate(&self) -> Option<f64> {
        self.history.last().map(|t| t.error_estimate)
    }
}

fn check_start(s: &TopSVD, rho: usize, shape: (usize, usize)) -> Result<()> {
    if rho == 0 || s.rank() < rho {
        return Err(Error::arg(alloc::format!(
            "approximant rank {} below target rank {rho}",
            s.rank()
        )));
    }
    if s.shape() != shape {
        return Err(Error::dim(alloc::format!(
            "approximant is {:?}, matrix is {shape:?}",
            s.shape()
        )));
    }
    Ok(())
}

/// Re-sketch with `F = Uᵀ`, `H = V` of the given approximation and recompress
/// to `rho`. Reads all of `M`.
pub fn refine_deterministic(o: &mut MatrixOracle, s: &TopSVD, rho: usize) -> Result<TopSVD> {
    refine_deterministic_with(o, s, rho, None).map(|(t, _)| t)
}

/// Sparse orthogonal multipliers used in place of the dense singular vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SparseSubstitution {
    pub kind: OrthogonalKind,
    /// Number of sparse orthogonal stages.
    pub stages: usize,
    pub seed: u64,
}

/// [`refine_deterministic`] optionally substituting sparse orthogonal
/// multipliers of sizes `(4ρ + 2, 2ρ + 1)` for `Uᵀ` and `V`. Returns whether
/// the run was superfast (read fewer than all entries).
pub fn refine_deterministic_with(
    o: &mut MatrixOracle,
    s: &TopSVD,
    rho: usize,
    substitution: Option<SparseSubstitution>,
) -> Result<(TopSVD, bool)> {
    check_start(s, rho, o.shape())?;
    let (m, n) = o.shape();
    let (f, h) = match substitution {
        None => (
            Multiplier::dense(s.u.transpose(), Side::Left),
            Multiplier::dense(s.v.clone(), Side::Right),
        ),
        Some(sub) => {
            let (k, l) = default_oversampling(rho);
            let flags = Flags {
                permute: true,
                ..Flags::default()
            };
            let f = gen_orthogonal_partial(m, sub.kind, sub.stages, k.min(m), split_seed(sub.seed, 0), flags)?;
            let h = gen_orthogonal_partial(n, sub.kind, sub.stages, l.min(n), split_seed(sub.seed, 1), flags)?
                .with_side(Side::Right);
            (f.into(), h.into())
        }
    };
    let before = o.reads();
    let sk = sketch(o, &f, &h)?;
    let core = sk.z.rows().min(sk.z.cols());
    let lra = nystrom_reconstruct(&sk, core)?;
    let (_, out) = recompress(&lra, rho)?;
    let superfast = o.reads() - before < (m * n) as u64;
    if !superfast {
        log::info!("deterministic refinement read every entry: not superfast");
    }
    Ok((out, superfast))
}

/// `p_i = ‖U[i, :]‖² / rank(U)` for `U` with orthonormal columns.
pub fn leverage_scores(u: &Mat) -> Result<Vec<f64>> {
    let r = u.cols();
    if r == 0 {
        return Err(Error::Empty);
    }
    let defect = u.orthonormality_defect();
    if defect > 1e-10 * r as f64 {
        return Err(Error::NotOrthonormal(defect));
    }
    Ok((0..u.rows())
        .map(|i| u.row(i).iter().map(|x| x * x).sum::<f64>() / r as f64)
        .collect())
}

/// Scores below this fraction of the uniform weight count as degenerate.
const DEGENERATE_SCORE: f64 = 1e-12;

/// Mixes with the uniform distribution (`0.9·p + 0.1/m`) when some score is
/// (numerically) zero; leaves `p` untouched otherwise.
fn guard_scores(p: Vec<f64>) -> Vec<f64> {
    let m = p.len() as f64;
    if p.iter().any(|&x| x <= DEGENERATE_SCORE / m) {
        p.into_iter().map(|x| 0.9 * x + 0.1 / m).collect()
    } else {
        p
    }
}

/// `count` draws with replacement from `p`, returned with their rescaling
/// factors `1/sqrt(count·p_i)`.
fn sample_with_replacement(p: &[f64], count: usize, seed: u64) -> Result<(Vec<usize>, Vec<f64>)> {
    let dist = WeightedIndex::new(p).map_err(|e| Error::arg(alloc::format!("bad sampling weights: {e}")))?;
    let mut rng = seeded(seed);
    let idx: Vec<usize> = (0..count).map(|_| dist.sample(&mut rng)).collect();
    let scale = idx.iter().map(|&i| 1.0 / (count as f64 * p[i]).sqrt()).collect();
    Ok((idx, scale))
}

/// CUR from `k` rows and `l` columns sampled by the leverage scores of the
/// approximant's singular vectors (with replacement and rescaling). The
/// nucleus is `D_c·(D_r·G·D_c)_ρ⁺·D_r`.
pub fn refine_leverage(o: &mut MatrixOracle, s: &TopSVD, rho: usize, k: usize, l: usize, seed: u64) -> Result<CURDecomp> {
    check_start(s, rho, o.shape())?;
    if k < rho || l < rho {
        return Err(Error::arg(alloc::format!("need k, l ≥ ρ = {rho} (got {k}, {l})")));
    }
    let pr = guard_scores(leverage_scores(&s.u.leading_cols(rho))?);
    let pc = guard_scores(leverage_scores(&s.v.leading_cols(rho))?);
    let (rows, dr) = sample_with_replacement(&pr, k, split_seed(seed, 0))?;
    let (cols, dc) = sample_with_replacement(&pc, l, split_seed(seed, 1))?;
    let c = o.read_cols(&cols)?;
    let r = o.read_rows(&rows)?;
    let g = c.select_rows(&rows);
    let scaled = g.scale_rows(&dr).scale_cols(&dc);
    let nucleus = generator_pinv(&scaled, rho)?.scale_rows(&dc).scale_cols(&dr);
    Ok(CURDecomp {
        row_idx: rows,
        col_idx: cols,
        c,
        nucleus,
        r,
        rho,
        row_scale: Some(dr),
        col_scale: Some(dc),
    })
}

/// Target sketches minus the sketches of `U·Σ·Vᵀ`, with compensated sums.
struct ResidualSketch {
    w: Mat,
    y: Mat,
    z: Mat,
}

fn residual_sketch(state: &RefineState, s: &TopSVD) -> Result<ResidualSketch> {
    let fu = state.f.left_times_compensated(&s.u)?.scale_cols(&s.sigma);
    let vth = state.h.right_times_compensated(&s.v.transpose())?;
    let vt = s.v.transpose();
    let t = &state.target;
    let sub = |base: &Mat, a: &Mat, b: &Mat| {
        Mat::from_fn(base.rows(), base.cols(), |i, j| {
            neumaier(base[(i, j)], (0..a.cols()).map(|q| -a[(i, q)] * b[(q, j)]))
        })
    };
    Ok(ResidualSketch {
        w: sub(&t.w, &fu, &vt),
        y: sub(&t.y, &s.u.scale_cols(&s.sigma), &vth),
        z: sub(&t.z, &fu, &vth),
    })
}

/// Sketch-space error proxy `‖F·(T − U·Σ·Vᵀ)·H‖_F` for the current target.
pub fn sketch_error(state: &RefineState, s: &TopSVD) -> Result<f64> {
    Ok(residual_sketch(state, s)?.z.fro_norm())
}

/// One residual-correction pass: truncate to ρ, reconstruct a rank-2ρ
/// correction `Δ` from the residual sketches, and truncate `M̃_ρ + Δ` to ρ.
/// Reads no entries of `M`.
pub fn refine_residual(o: &MatrixOracle, mut state: RefineState) -> Result<RefineState> {
    check_start(&state.current, state.rho, o.shape())?;
    let rho = state.rho;
    let cur = truncate_svd(&state.current, rho)?;
    let res = residual_sketch(&state, &cur)?;

    // Core of Δ, with singular values cut relative to the target's own scale.
    let zs = svd(&res.z)?;
    let z1 = svd(&state.target.z)?.sigma[0];
    let keep = zs
        .sigma
        .iter()
        .take(2 * rho)
        .take_while(|&&x| x > PINV_CUTOFF * z1 && x > 0.0)
        .count();
    let next = if keep == 0 {
        cur.clone()
    } else {
        let inv: Vec<f64> = zs.sigma[..keep].iter().map(|x| 1.0 / x).collect();
        let t = zs.v.leading_cols(keep).scale_cols(&inv).matmul(&zs.u.leading_cols(keep).transpose());
        // [Y_Δ | U] · diag(T_Δ, Σ) · [W_Δ; Vᵀ]
        let a = res.y.hstack(&cur.u);
        let w = t.block_diag(&Mat::from_diag(&cur.sigma));
        let b = res.w.vstack(&cur.v.transpose());
        lra_to_topsvd(&a, &w, &b, rho)?
    };
    let err = sketch_error(&state, &next)?;
    let iteration = state.history.len();
    state.history.push(TraceEntry {
        iteration,
        error_estimate: err,
        gap: 0.0,
        step: 1.0,
        reads: o.reads(),
    });
    if state.history.len() >= 4 {
        let old = state.history[state.history.len() - 4].error_estimate;
        if err > 0.99 * old {
            state.stagnated = true;
            log::info!("residual refinement stagnated at {err:e}");
        }
    }
    state.current = next;
    Ok(state)
}

/// `sqrt(mn/s · Σ (M[i,j] − M̃[i,j])²)` over `s` entries sampled uniformly
/// without replacement. Reads exactly the sampled entries.
pub fn estimate_residual_fro(o: &mut MatrixOracle, s: &TopSVD, samples: usize, seed: u64) -> Result<f64> {
    let (m, n) = o.shape();
    if s.shape() != (m, n) {
        return Err(Error::dim("approximant and matrix shapes differ"));
    }
    if samples == 0 || samples > m * n {
        return Err(Error::arg(alloc::format!("sample count {samples} outside 1..={}", m * n)));
    }
    let picks = index::sample(&mut seeded(seed), m * n, samples);
    let mut acc = 0.0;
    for p in picks.iter() {
        let (i, j) = (p / n, p % n);
        let d = o.read_entry(i, j)? - s.entry(i, j);
        acc += d * d;
    }
    Ok((acc * (m * n) as f64 / samples as f64).sqrt())
}

/// Safeguard fraction: steps keep `s·e ≤ 0.2·g`.
pub const SAFEGUARD: f64 = 0.2;
pub const MIN_STEP: f64 = 0.05;
pub const DEFAULT_MAX_STEPS: usize = 25;

/// Step size for remaining error `e` and gap `g`: the largest `s` with
/// `s·e ≤ 0.2·g`, clamped to `[0.05, 1]`. Returns `(s, no_gap)`.
pub fn safeguarded_step(e: f64, g: f64) -> (f64, bool) {
    if !(g > 0.0) {
        return (MIN_STEP, true);
    }
    if e <= 0.0 {
        return (1.0, false);
    }
    ((SAFEGUARD * g / e).clamp(MIN_STEP, 1.0), false)
}

/// Options for [`homotopy_refine`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomotopyOptions {
    pub recipe: Recipe,
    pub max_steps: usize,
    /// Entries sampled by the initial error estimate.
    pub estimator_samples: usize,
    /// Seed for the estimator, the default multipliers and leverage sampling.
    pub seed: u64,
}

impl HomotopyOptions {
    pub fn new(recipe: Recipe, seed: u64) -> Self {
        HomotopyOptions {
            recipe,
            max_steps: DEFAULT_MAX_STEPS,
            estimator_samples: 400,
            seed,
        }
    }
}

/// Homotopy continuation from `start` towards `M` along
/// `M_{i+1} = M_i + s_i·(M − M_i)`, with `M_0 = start`.
///
/// Path points are never formed: they are `(1 − c)·start + c·M` for a scalar
/// weight `c`, and recipes see blended sketches or blended entries.
pub fn homotopy_refine(o: &mut MatrixOracle, start: &TopSVD, rho: usize, opts: HomotopyOptions) -> Result<RefineState> {
    let mut state = RefineState::with_gaussian(o, start.clone(), rho, split_seed(opts.seed, 7))?;
    homotopy_with_state(o, start, &mut state, opts)?;
    Ok(state)
}

/// [`homotopy_refine`] driving a caller-built state whose sketches are of `M`.
pub fn homotopy_with_state(
    o: &mut MatrixOracle,
    start: &TopSVD,
    state: &mut RefineState,
    opts: HomotopyOptions,
) -> Result<()> {
    let rho = state.rho;
    let start = truncate_svd(start, rho)?;
    let (m, n) = o.shape();
    let samples = opts.estimator_samples.clamp(1, m * n);
    let e0 = estimate_residual_fro(o, &start, samples, split_seed(opts.seed, 3))?;
    let full = state.target.clone();
    // Sketches of the start point, computed from its factors.
    let fs = state.f.left_times(&start.u)?.scale_cols(&start.sigma);
    let sh = state.h.right_times(&start.v.transpose())?;
    let start_sk = (fs.matmul(&start.v.transpose()), start.u.scale_cols(&start.sigma).matmul(&sh), fs.matmul(&sh));

    let mut c = 0.0;
    state.path_weight = 0.0;
    state.current = start.clone();
    for step in 0..opts.max_steps {
        let e = (1.0 - c) * e0;
        let g = gap_estimate(state)?;
        let (s, no_gap) = if e0 <= 1e-14 * full.z.fro_norm().max(f64::MIN_POSITIVE) {
            (1.0, false)
        } else {
            safeguarded_step(e, g)
        };
        state.no_gap |= no_gap;
        c = if s >= 1.0 { 1.0 } else { c + s * (1.0 - c) };
        state.path_weight = c;
        let blend = |a: &Mat, b: &Mat| &a.scale(1.0 - c) + &b.scale(c);
        state.target = SketchSet {
            w: blend(&start_sk.0, &full.w),
            y: blend(&start_sk.1, &full.y),
            z: blend(&start_sk.2, &full.z),
            ..full.clone()
        };
        state.current = match opts.recipe {
            Recipe::Residual => refine_residual(o, state.clone())?.current,
            Recipe::Deterministic => path_deterministic(o, state, &start, c)?,
            Recipe::Leverage => path_leverage(o, state, &start, c, split_seed(opts.seed, 100 + step as u64))?,
        };
        log::debug!("homotopy step {step}: e = {e:e}, g = {g:e}, s = {s}, s·e = {:e}", s * e);
        state.history.push(TraceEntry {
            iteration: step,
            error_estimate: (1.0 - c) * e0,
            gap: g,
            step: s,
            reads: o.reads(),
        });
        if c >= 1.0 {
            break;
        }
    }
    state.target = full;
    Ok(())
}

/// `σ_ρ − σ_{ρ+1}` of a rank-(ρ+1) recompression of the current target sketch.
fn gap_estimate(state: &RefineState) -> Result<f64> {
    let rho = state.rho;
    let t = &state.target;
    let core = (rho + 1).min(t.z.rows().min(t.z.cols()));
    let sk = SketchSet {
        w: t.w.clone(),
        y: t.y.clone(),
        z: t.z.clone(),
        provenance: Default::default(),
        reads: t.reads,
        flops: 0,
    };
    let sigma = match nystrom_reconstruct(&sk, core).and_then(|l| recompress(&l, core)) {
        Ok((_, s)) => s.sigma,
        Err(Error::SketchLostInput) | Err(Error::ZeroGenerator) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    let a = sigma.get(rho - 1).copied().unwrap_or(0.0);
    let b = sigma.get(rho).copied().unwrap_or(0.0);
    Ok(a - b)
}

/// Recipe (i) at path point `c`: sketches of `(1 − c)·start + c·M` with
/// `F = Uᵀ`, `H = V` of the current approximant.
fn path_deterministic(o: &mut MatrixOracle, state: &RefineState, start: &TopSVD, c: f64) -> Result<TopSVD> {
    let s = &state.current;
    let f = Multiplier::dense(s.u.transpose(), Side::Left);
    let h = Multiplier::dense(s.v.clone(), Side::Right);
    let sk = sketch(o, &f, &h)?;
    let st_w = f.left_times(&start.u)?.scale_cols(&start.sigma).matmul(&start.v.transpose());
    let st_y = start.u.scale_cols(&start.sigma).matmul(&h.right_times(&start.v.transpose())?);
    let blend = |a: &Mat, b: &Mat| &a.scale(1.0 - c) + &b.scale(c);
    let w = blend(&st_w, &sk.w);
    let y = blend(&st_y, &sk.y);
    let z = f.left_times(&y)?;
    let blended = SketchSet {
        w,
        y,
        z,
        ..sk
    };
    let core = blended.z.rows().min(blended.z.cols());
    let lra = nystrom_reconstruct(&blended, core)?;
    Ok(recompress(&lra, state.rho)?.1)
}

/// Recipe (ii) at path point `c`: leverage CUR on blended entries, converted
/// back to a top SVD.
fn path_leverage(o: &mut MatrixOracle, state: &RefineState, start: &TopSVD, c: f64, seed: u64) -> Result<TopSVD> {
    let rho = state.rho;
    let (k, l) = default_oversampling(rho);
    let (m, n) = o.shape();
    let mut cur = refine_leverage(o, &state.current, rho, k.min(m), l.min(n), seed)?;
    let blend_entry = |x: f64, i: usize, j: usize| (1.0 - c) * start.entry(i, j) + c * x;
    let cols = cur.col_idx.clone();
    let rows = cur.row_idx.clone();
    cur.c = Mat::from_fn(m, cols.len(), |i, t| blend_entry(cur.c[(i, t)], i, cols[t]));
    cur.r = Mat::from_fn(rows.len(), n, |t, j| blend_entry(cur.r[(t, j)], rows[t], j));
    let (dr, dc) = (cur.row_scale.clone().unwrap_or_default(), cur.col_scale.clone().unwrap_or_default());
    let g = cur.c.select_rows(&rows).scale_rows(&dr).scale_cols(&dc);
    let nucleus = generator_pinv(&g, rho)?.scale_rows(&dc).scale_cols(&dr);
    lra_to_topsvd(&cur.c, &nucleus, &cur.r, rho)
}
