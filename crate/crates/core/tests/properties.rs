//! Property suites over small random instances.

use lowrank_core::cur::{canonical_cur, verify_cur_exactness};
use lowrank_core::linalg::{spectral_norm, subspace_distance, svd, tail_norm};
use lowrank_core::multipliers::{gen_abridged_hadamard, gen_bidiag_perm, Flags, Multiplier, Side};
use lowrank_core::rng::{gaussian, seeded};
use lowrank_core::sketch::{nystrom_reconstruct, recompress, sketch};
use lowrank_core::{Mat, MatrixOracle};
use proptest::prelude::*;

fn small_dims() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=6, 1usize..=6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn truncation_beats_random_competitors((m, n) in small_dims(), rho in 1usize..=3, seed in any::<u64>()) {
        let rho = rho.min(m.min(n));
        let mut rng = seeded(seed);
        let a = gaussian(m, n, &mut rng);
        let s = svd(&a).unwrap();
        let best = (&a - &s.truncate(rho).unwrap().reconstruct()).fro_norm();
        prop_assert!((best - tail_norm(&s.sigma, rho)).abs() <= 1e-10 * a.fro_norm().max(1.0));
        for _ in 0..16 {
            let x = gaussian(m, rho, &mut rng);
            let y = gaussian(rho, n, &mut rng);
            // Best competitor with column space of x: project a onto it.
            let q = lowrank_core::linalg::orthonormal_basis(&x).unwrap();
            let proj = q.matmul(&q.transpose().matmul(&a));
            prop_assert!((&a - &proj).fro_norm() >= best - 1e-10);
            prop_assert!((&a - &x.matmul(&y)).fro_norm() >= best - 1e-10);
        }
    }

    #[test]
    fn singular_values_move_at_most_by_the_spectral_norm((m, n) in small_dims(), scale in 1e-6f64..1.0, seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let a = gaussian(m, n, &mut rng);
        let e = gaussian(m, n, &mut rng).scale(scale);
        let sa = svd(&a).unwrap().sigma;
        let sb = svd(&(&a + &e)).unwrap().sigma;
        let bound = svd(&e).unwrap().sigma[0];
        for (x, y) in sa.iter().zip(&sb) {
            prop_assert!((x - y).abs() <= bound + 1e-10);
        }
        let est = spectral_norm(&e);
        prop_assert!(est.value <= bound * (1.0 + 1e-8) + 1e-15);
    }

    #[test]
    fn top_subspaces_are_stable_within_the_gap(seed in any::<u64>(), rho in 1usize..=3, frac in 0.0f64..=0.2) {
        let (m, n) = (8, 7);
        let mut rng = seeded(seed);
        let sig: Vec<f64> = (0..n).map(|j| if j < rho { 3.0 + (rho - j) as f64 } else { 1.0 / (j + 1) as f64 }).collect();
        let a = lowrank_core::inputs::spectrum_matrix(m, n, &sig, seed).unwrap();
        let g = sig[rho - 1] - sig[rho];
        let e0 = gaussian(m, n, &mut rng);
        let e = e0.scale(frac * g / e0.fro_norm().max(1e-300));
        let s0 = svd(&a).unwrap();
        let s1 = svd(&(&a + &e)).unwrap();
        let bound = 4.0 * e.fro_norm() / g;
        let dl = subspace_distance(&s1.u.leading_cols(rho), &s0.u.leading_cols(rho)).unwrap();
        let dr = subspace_distance(&s1.v.leading_cols(rho), &s0.v.leading_cols(rho)).unwrap();
        prop_assert!(dl.max(dr) <= bound + 1e-8, "{} > {}", dl.max(dr), bound);
    }

    #[test]
    fn cur_exact_iff_generator_rank_matches(seed in any::<u64>(), n in 4usize..=6, rank in 1usize..=3, k in 1usize..=3) {
        let mut rng = seeded(seed);
        let a = gaussian(n, rank, &mut rng).matmul(&gaussian(rank, n, &mut rng));
        let rows: Vec<usize> = (0..k).collect();
        let cols: Vec<usize> = (n - k..n).collect();
        let mut o = MatrixOracle::new(a.clone());
        let c = canonical_cur(&mut o, &rows, &cols, k.min(rank)).unwrap();
        let (exact, _) = verify_cur_exactness(&a, &c).unwrap();
        // Generic Gaussian factors: rank(G) = min(k, rank).
        prop_assert_eq!(exact, k >= rank);
    }

    #[test]
    fn structured_equals_densified(seed in any::<u64>(), d in 0u32..=4, k in 1usize..=16, rows in 1usize..=20) {
        let a = gaussian(rows, 16, &mut seeded(seed));
        let h: Multiplier = gen_abridged_hadamard(16, d, k, seed, Flags::default()).unwrap().with_side(Side::Right).into();
        let mut o = MatrixOracle::new(a.clone());
        let out = h.apply_right(&mut o).unwrap();
        prop_assert!((&out - &a.matmul(&h.densify())).max_abs() <= 1e-12 * a.max_abs().max(1.0));
        prop_assert!(o.reads() <= ((rows * k) << d) as u64);
        let f: Multiplier = gen_bidiag_perm(16, 2, k, seed, Flags::default()).unwrap().into();
        let mut o = MatrixOracle::new(a.transpose());
        let out = f.apply_left(&mut o).unwrap();
        let want = f.densify().matmul(&a.transpose());
        prop_assert!((&out - &want).max_abs() <= 1e-12 * want.max_abs().max(1.0));
    }

    #[test]
    fn recompression_obeys_the_truncation_bound(seed in any::<u64>(), rho in 1usize..=3, noise in 0.0f64..0.1) {
        let (m, n) = (12, 10);
        let mut rng = seeded(seed);
        let a = &gaussian(m, rho, &mut rng).matmul(&gaussian(rho, n, &mut rng)) + &gaussian(m, n, &mut rng).scale(noise);
        let (k, l) = (4 * rho + 2, 2 * rho + 1);
        let f = Multiplier::dense(gaussian(k, m, &mut rng), Side::Left);
        let h = Multiplier::dense(gaussian(n, l, &mut rng), Side::Right);
        let mut o = MatrixOracle::new(a.clone());
        let lra = nystrom_reconstruct(&sketch(&mut o, &f, &h).unwrap(), l).unwrap();
        let (x, _) = recompress(&lra, rho).unwrap();
        let tau = tail_norm(&svd(&a).unwrap().sigma, rho);
        let lhs = (&x.reconstruct() - &a).fro_norm();
        let rhs = tau + 2.0 * (&lra.reconstruct() - &a).fro_norm() + 1e-8 * a.fro_norm();
        prop_assert!(lhs <= rhs, "{lhs} > {rhs}");
    }

    #[test]
    fn generators_are_seed_deterministic(seed in any::<u64>(), d in 0u32..=3) {
        let a: Mat = gen_abridged_hadamard(32, d, 8, seed, Flags::default()).unwrap().densify();
        let b: Mat = gen_abridged_hadamard(32, d, 8, seed, Flags::default()).unwrap().densify();
        prop_assert_eq!(a, b);
    }
}
