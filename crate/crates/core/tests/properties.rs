use proptest::prelude::*;

use coarsekit::constructions::translation_average;
use coarsekit::kernels::{
    default_tolerance, distance_kernel, is_negative_definite, is_positive_definite, schoenberg_exp, witness_validate,
    KernelMatrix,
};
use coarsekit::maps::GaussianSphereMap;
use coarsekit::moduli::rescale_identity;
use coarsekit::spaces::{sample_grid, PointSet, QuasiNormedSpace};

fn distinct_points(dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::btree_set(prop::collection::vec(-8i32..=8, dim), 2..9)
        .prop_map(|set| set.into_iter().map(|p| p.into_iter().map(|v| v as f64 * 0.5).collect()).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lq_metrics_are_negative_definite(pts in distinct_points(2), q in 0.2f64..=2.0) {
        let space = QuasiNormedSpace::lq(2, q).unwrap();
        let set = PointSet::from_points(space, pts).unwrap();
        let n = distance_kernel(&set);
        let verdict = is_negative_definite(&n, default_tolerance(&n)).unwrap();
        prop_assert!(verdict.passed, "{verdict}");
    }

    #[test]
    fn exponentials_of_metrics_are_positive_definite(pts in distinct_points(1), t in 0.01f64..5.0) {
        let set = PointSet::from_points(QuasiNormedSpace::euclidean(1), pts).unwrap();
        let k = schoenberg_exp(&distance_kernel(&set), t).unwrap();
        prop_assert!(is_positive_definite(&k, 1e-9).unwrap().passed);
    }

    #[test]
    fn failing_verdicts_carry_valid_witnesses(rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 4), 4)) {
        // symmetrize with zero diagonal so ND is a real question
        let m: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..4).map(|j| if i == j { 0.0 } else { rows[i.min(j)][i.max(j)] }).collect())
            .collect();
        let n = KernelMatrix::unlabeled(&m).unwrap();
        let tol = default_tolerance(&n);
        let verdict = is_negative_definite(&n, tol).unwrap();
        match verdict.certificate {
            Some(c) => prop_assert!(witness_validate(&n, &c, tol).unwrap().valid),
            None => prop_assert!(verdict.passed),
        }
    }

    #[test]
    fn gaussian_window_average_ignores_the_window(radius in 1u32..=3, step in 0.25f64..2.0) {
        let space = QuasiNormedSpace::euclidean(1);
        let sample = sample_grid(&space, 3, 1.0).unwrap();
        let window = sample_grid(&space, radius, step).unwrap();
        let f = translation_average(&GaussianSphereMap::default(), &sample, &window).unwrap();
        for (i, x) in f.support().points().iter().enumerate() {
            let exact = 2.0 * (1.0 - (-x[0] * x[0]).exp());
            prop_assert!((f.value(i) - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn power_of_two_rescaling_is_bitwise(pts in distinct_points(1), k in 1i32..4) {
        let set = PointSet::from_points(QuasiNormedSpace::euclidean(1), pts).unwrap();
        let a = 2f64.powi(k);
        let id = rescale_identity(&set, a, &GaussianSphereMap::default(), &[0.5, 1.0, 2.0]).unwrap();
        prop_assert!(id.exact);
    }
}
