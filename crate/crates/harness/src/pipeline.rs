//! Executes one configured pipeline against a counted oracle.

use lowrank_core::cur::{canonical_cur, CURDecomp};
use lowrank_core::linalg::{svd, truncate_svd, TopSVD};
use lowrank_core::multipliers::{AnyMultiplier, Multiplier, MultiplierConfig, Side};
use lowrank_core::refine::{
    homotopy_with_state, refine_deterministic, refine_leverage, refine_residual, HomotopyOptions, Recipe,
    RefineState, TraceEntry,
};
use lowrank_core::rng::{seeded, split_seed};
use lowrank_core::sketch::{lra_to_topsvd, nystrom_reconstruct, recompress_counted, sketch, LRA2};
use lowrank_core::{Complex64, Mat, MatrixOracle, Result};
use rand::seq::index;

use crate::config::{CurPipeline, EntrySubsetPipeline, PipelineConfig, RefinementConfig, SideSpec, SketchPipeline};

/// An approximation in whatever factored form the pipeline produced.
#[derive(Debug, Clone)]
pub enum Approximation {
    Lra(LRA2<f64>),
    ComplexLra(LRA2<Complex64>),
    Svd(TopSVD),
    Cur(CURDecomp),
}

impl Approximation {
    /// Dense real approximant (the real part for complex factors).
    pub fn dense(&self) -> Mat {
        match self {
            Approximation::Lra(l) => l.reconstruct(),
            Approximation::ComplexLra(l) => l.reconstruct().map(|z: Complex64| z.re),
            Approximation::Svd(s) => s.reconstruct(),
            Approximation::Cur(c) => c.reconstruct(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    /// Final output.
    pub approx: Approximation,
    /// The Nystrom approximation `XY` before recompression, when the pipeline
    /// recompressed.
    pub pre_recompression: Option<Approximation>,
    /// Flops spent on sketches and conversions.
    pub flops: u64,
    /// Refinement trace, empty without refinement.
    pub trace: Vec<TraceEntry>,
}

/// Runs `p` on `o` with all randomness derived from `seed`.
pub fn execute(o: &mut MatrixOracle, p: &PipelineConfig, seed: u64) -> Result<PipelineOutput> {
    match p {
        PipelineConfig::Sketch(s) => run_sketch(o, s, seed),
        PipelineConfig::Cur(c) => run_cur(o, c, seed),
        PipelineConfig::EntrySubset(e) => run_entry_subset(o, e, seed),
    }
}

/// Multiplier config for one side of a trial.
pub fn side_config(spec: &SideSpec, dim: usize, size: usize, seed: u64) -> MultiplierConfig {
    MultiplierConfig {
        family: spec.family,
        n: dim,
        d: spec.d,
        k_or_l: size,
        seed,
        flags: spec.flags,
    }
}

fn run_sketch(o: &mut MatrixOracle, p: &SketchPipeline, seed: u64) -> Result<PipelineOutput> {
    let (m, n) = o.shape();
    let fc = side_config(&p.left, m, p.k, split_seed(seed, 1));
    let hc = side_config(&p.right, n, p.l, split_seed(seed, 2));
    let f = fc.build(Side::Left)?;
    let h = hc.build(Side::Right)?;
    match (f, h) {
        (AnyMultiplier::Real(f), AnyMultiplier::Real(h)) => {
            let s = sketch(o, &f, &h)?.with_provenance(fc, hc);
            let lra = nystrom_reconstruct(&s, p.rho)?;
            if !p.recompress && p.refinement.is_none() {
                return Ok(PipelineOutput {
                    approx: Approximation::Lra(lra.to_lra2()),
                    pre_recompression: None,
                    flops: s.flops,
                    trace: Vec::new(),
                });
            }
            let (x, top, rep) = recompress_counted(&lra, p.rho)?;
            let pre = Some(Approximation::Lra(lra.to_lra2()));
            let flops = s.flops + rep.flops;
            match p.refinement {
                None => Ok(PipelineOutput {
                    approx: Approximation::Lra(x),
                    pre_recompression: pre,
                    flops,
                    trace: Vec::new(),
                }),
                Some(r) => {
                    let (approx, trace) = refine(o, top, p, r, f, h, split_seed(seed, 3))?;
                    Ok(PipelineOutput {
                        approx,
                        pre_recompression: pre,
                        flops,
                        trace,
                    })
                }
            }
        }
        (f, h) => {
            let f = complexify(f);
            let h = complexify(h);
            let s = sketch(o, &f, &h)?.with_provenance(fc, hc);
            let lra = nystrom_reconstruct(&s, p.rho)?;
            if !p.recompress {
                return Ok(PipelineOutput {
                    approx: Approximation::ComplexLra(lra.to_lra2()),
                    pre_recompression: None,
                    flops: s.flops,
                    trace: Vec::new(),
                });
            }
            let (x, _, rep) = recompress_counted(&lra, p.rho)?;
            Ok(PipelineOutput {
                approx: Approximation::ComplexLra(x),
                pre_recompression: Some(Approximation::ComplexLra(lra.to_lra2())),
                flops: s.flops + rep.flops,
                trace: Vec::new(),
            })
        }
    }
}

fn complexify(m: AnyMultiplier) -> Multiplier<Complex64> {
    match m {
        AnyMultiplier::Real(m) => m.to_complex(),
        AnyMultiplier::Complex(m) => m,
    }
}

fn refine(
    o: &mut MatrixOracle,
    start: TopSVD,
    p: &SketchPipeline,
    r: RefinementConfig,
    f: Multiplier,
    h: Multiplier,
    seed: u64,
) -> Result<(Approximation, Vec<TraceEntry>)> {
    let rho = p.rho;
    if r.homotopy {
        let mut state = if p.k >= 2 * rho && p.l >= 2 * rho {
            RefineState::new(o, start.clone(), rho, f, h)?
        } else {
            RefineState::with_gaussian(o, start.clone(), rho, split_seed(seed, 0))?
        };
        let opts = HomotopyOptions {
            max_steps: r.steps,
            ..HomotopyOptions::new(r.recipe, split_seed(seed, 1))
        };
        homotopy_with_state(o, &start, &mut state, opts)?;
        return Ok((Approximation::Svd(state.current), state.history));
    }
    match r.recipe {
        Recipe::Residual => {
            let mut state = RefineState::new(o, start, rho, f, h)?;
            for _ in 0..r.steps {
                state = refine_residual(o, state)?;
                if state.stagnated {
                    break;
                }
            }
            Ok((Approximation::Svd(state.current), state.history))
        }
        Recipe::Deterministic => {
            let mut cur = start;
            for _ in 0..r.steps {
                cur = refine_deterministic(o, &cur, rho)?;
            }
            Ok((Approximation::Svd(cur), Vec::new()))
        }
        Recipe::Leverage => {
            let mut cur = start;
            let mut last = None;
            for step in 0..r.steps {
                let c = refine_leverage(o, &cur, rho, p.k, p.l, split_seed(seed, 10 + step as u64))?;
                cur = lra_to_topsvd(&c.c, &c.nucleus, &c.r, rho)?;
                last = Some(c);
            }
            let c = last.expect("steps > 0");
            Ok((Approximation::Cur(c), Vec::new()))
        }
    }
}

fn run_cur(o: &mut MatrixOracle, p: &CurPipeline, seed: u64) -> Result<PipelineOutput> {
    let (m, n) = o.shape();
    let mut rng = seeded(split_seed(seed, 5));
    let mut rows = index::sample(&mut rng, m, p.rows).into_vec();
    let mut cols = index::sample(&mut rng, n, p.cols).into_vec();
    rows.sort_unstable();
    cols.sort_unstable();
    let c = canonical_cur(o, &rows, &cols, p.rho)?;
    Ok(PipelineOutput {
        approx: Approximation::Cur(c),
        pre_recompression: None,
        flops: 0,
        trace: Vec::new(),
    })
}

/// The entry positions read by the entry-subset pipeline, row-major sorted.
pub fn entry_subset(m: usize, n: usize, fraction: f64, seed: u64) -> Vec<(usize, usize)> {
    let total = m * n;
    let count = ((fraction * total as f64).round() as usize).clamp(1, total);
    let mut rng = seeded(split_seed(seed, 4));
    let mut idx = index::sample(&mut rng, total, count).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|t| (t / n, t % n)).collect()
}

fn run_entry_subset(o: &mut MatrixOracle, p: &EntrySubsetPipeline, seed: u64) -> Result<PipelineOutput> {
    let (m, n) = o.shape();
    let mut masked = Mat::zeros(m, n);
    for (i, j) in entry_subset(m, n, p.fraction, seed) {
        masked[(i, j)] = o.read_entry(i, j)?;
    }
    let approx = if masked.max_abs() == 0.0 {
        Approximation::Lra(LRA2::new(Mat::zeros(m, 1), Mat::zeros(1, n))?)
    } else {
        Approximation::Svd(truncate_svd(&svd(&masked)?, p.rho)?)
    };
    Ok(PipelineOutput {
        approx,
        pre_recompression: None,
        flops: 0,
        trace: Vec::new(),
    })
}
