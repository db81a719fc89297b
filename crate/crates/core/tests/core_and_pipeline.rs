use ontd_core::core_solver::solve_core_detailed;
use ontd_core::pipeline::compression_ratio_partial;
use ontd_core::{
    compression_ratio, decompose, gen_factor, gen_tensor, kron, similarity, solve_core, space_savings, suite,
    DecomposeConfig, DenseMatrix, DenseTensor, FactorRoute, ModeFactor,
};
use proptest::prelude::*;

/// Least squares `min ||vec(A) - (U1 kron U2 kron U3) vec(S)||` through the
/// normal equations, solved by Gaussian elimination with partial pivoting.
fn kron_least_squares(a: &DenseTensor, us: &[DenseMatrix]) -> Vec<f64> {
    let w = kron(&us[0], &kron(&us[1], &us[2]));
    let wt = w.transpose();
    let normal = &wt * &w;
    let rhs = &wt * &DenseMatrix::from_vec(a.len(), 1, a.values().to_vec()).unwrap();
    let n = normal.rows();
    let mut aug: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| normal[(i, j)]).chain([rhs[(i, 0)]]).collect())
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| aug[x][c].abs().total_cmp(&aug[y][c].abs())).unwrap();
        aug.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = aug[r][c] / aug[c][c];
                for k in c..=n {
                    aug[r][k] -= f * aug[c][k];
                }
            }
        }
    }
    (0..n).map(|i| (aug[i][n] / aug[i][i]).max(0.0)).collect()
}

proptest! {
    #[test]
    fn core_matches_kron_oracle(
        ranks in prop::collection::vec(1usize..=3, 3),
        values in prop::collection::vec(0.0f64..5.0, 27),
        seed in any::<u64>(),
    ) {
        let a = DenseTensor::new(vec![3, 3, 3], values).unwrap();
        let factors: Vec<ModeFactor> = ranks
            .iter()
            .enumerate()
            .map(|(n, &j)| ModeFactor::Factor(gen_factor(3, j, 1, seed.wrapping_add(n as u64)).unwrap()))
            .collect();
        let us: Vec<DenseMatrix> = factors.iter().map(|f| f.as_factor().unwrap().matrix().clone()).collect();
        let solved = solve_core_detailed(&a, &factors).unwrap();
        prop_assert_eq!(solved.clamped, 0);
        let oracle = kron_least_squares(&a, &us);
        for (x, y) in solved.core.values().iter().zip(&oracle) {
            prop_assert!((x - y).abs() <= 1e-11, "{} vs {}", x, y);
        }
        prop_assert!(solved.core.frob_norm() <= a.frob_norm() + 1e-12);
    }
}

#[test]
fn identity_modes_match_kron_oracle() {
    let a = DenseTensor::from_fn(vec![3, 3, 3], |i| (i[0] * 9 + i[1] * 3 + i[2]) as f64 % 7.0).unwrap();
    let u = gen_factor(3, 2, 1, 4).unwrap();
    let factors = vec![ModeFactor::Identity(3), ModeFactor::Factor(u.clone()), ModeFactor::Identity(3)];
    let oracle = kron_least_squares(&a, &[DenseMatrix::identity(3), u.into_matrix(), DenseMatrix::identity(3)]);
    let core = solve_core(&a, &factors).unwrap();
    for (x, y) in core.values().iter().zip(&oracle) {
        assert!((x - y).abs() <= 1e-11);
    }
}

#[test]
fn exactly_decomposable_core_keeps_norm() {
    for spec in suite(20, 0) {
        let (t, truth) = gen_tensor(&spec).unwrap();
        let core = solve_core(&t, truth.factors()).unwrap();
        assert!((core.frob_norm() - t.frob_norm()).abs() <= 1e-12 * t.frob_norm().max(1.0));
        assert!(core.frob_distance(truth.core()).unwrap() <= 1e-12);
    }
}

#[test]
fn exact_route_and_determinism() {
    for spec in suite(5, 40) {
        let (t, _) = gen_tensor(&spec).unwrap();
        let mut cfg = DecomposeConfig::new(spec.ranks.clone());
        cfg.route = FactorRoute::exact();
        assert!(decompose(&t, &cfg).unwrap().relative_error <= 1e-10);

        let cfg = DecomposeConfig { seed: 3, ..DecomposeConfig::new(spec.ranks.clone()) };
        assert_eq!(decompose(&t, &cfg).unwrap(), decompose(&t, &cfg).unwrap());
    }
}

#[test]
fn compression_accounting() {
    let (dims, ranks) = ([112, 92, 80], [15, 15, 20]);
    let r = compression_ratio(&dims, &ranks);
    assert!((r - 9160.0 / 824320.0).abs() <= 1e-12);
    assert_eq!(space_savings(&dims, &ranks), 1.0 - r);
    assert_eq!(compression_ratio_partial(&dims, &ranks, &[]), r);
}

#[test]
fn similarity_ignores_positive_rescaling() {
    let truth = vec![vec![1.0, 0.0, 1.0, 0.0], vec![0.0, 1.0, 0.0, 1.0]];
    let extracted = vec![vec![0.1, 0.9, 0.0, 0.8], vec![0.7, 0.2, 0.9, 0.0]];
    let base = similarity(&extracted, &truth).unwrap();
    let scaled = vec![extracted[0].iter().map(|v| v * 37.0).collect(), extracted[1].iter().map(|v| v * 0.01).collect()];
    assert!((similarity(&scaled, &truth).unwrap() - base).abs() <= 1e-12);
    assert!((similarity(&truth, &truth).unwrap() - 1.0).abs() <= 1e-12);
}
