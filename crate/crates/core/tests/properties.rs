mod common;

use proptest::prelude::*;

use pcarf::data::{stratified_split, LabeledDataset, SplitSpec};
use pcarf::forest::{best_split, fit_forest, gini, predict_score, ForestModel, ForestParams, MIN_IMPURITY_DECREASE};
use pcarf::linalg::{covariance, eigh_symmetric, mean_center};
use pcarf::metrics::{metrics_report, roc_curve, ConfusionMatrix};
use pcarf::pca::{self, ComponentPolicy};
use pcarf::rng::SplitMix64;
use pcarf::Matrix;

use common::{pair_counting_auc, random_integer_dataset, random_symmetric};

fn labels_with_both(n: usize, rng: &mut SplitMix64) -> Vec<u8> {
    let mut y: Vec<u8> = (0..n).map(|_| rng.below(2) as u8).collect();
    y[0] = 0;
    y[1] = 1;
    y
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_is_a_partition_preserving_prevalence(
        n in 4usize..300,
        f in 0.05f64..0.95,
        seed in any::<u64>(),
        data_seed in any::<u64>(),
    ) {
        let mut rng = SplitMix64::new(data_seed);
        let y = labels_with_both(n, &mut rng);
        let x = Matrix::new(n, 1, (0..n).map(|i| i as f64).collect()).unwrap();
        let ds = LabeledDataset::unnamed(x, y.clone()).unwrap();
        let spec = SplitSpec::new(f, seed, true).unwrap();
        let Ok(split) = stratified_split(&ds, &spec) else {
            // Only allowed when one side would be empty.
            let counts = ds.class_counts();
            let test: usize = counts.iter().map(|&c| (c as f64 * f).round() as usize).sum();
            prop_assert!(test == 0 || test == n);
            return Ok(());
        };
        let mut all: Vec<usize> = split.train_indices.iter().chain(&split.test_indices).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        for class in 0..2u8 {
            let total = y.iter().filter(|&&l| l == class).count() as f64;
            let in_test = split.test_indices.iter().filter(|&&i| y[i] == class).count() as f64;
            prop_assert!((in_test - total * f).abs() <= 1.0);
        }
        prop_assert_eq!(split.train.n_samples() + split.test.n_samples(), n);
    }

    #[test]
    fn trapezoidal_auc_matches_pair_counting(
        n in 2usize..200,
        levels in 1usize..20,
        seed in any::<u64>(),
    ) {
        let mut rng = SplitMix64::new(seed);
        let y = labels_with_both(n, &mut rng);
        let scores: Vec<f64> = (0..n).map(|_| rng.below(levels) as f64 / levels as f64).collect();
        let roc = roc_curve(&scores, &y, 1).unwrap();
        prop_assert!((roc.auc - pair_counting_auc(&scores, &y, 1)).abs() < 1e-12);

        prop_assert_eq!(roc.points[0], (0.0, 0.0));
        prop_assert_eq!(*roc.points.last().unwrap(), (1.0, 1.0));
        for w in roc.points.windows(2) {
            prop_assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
        }

        let flipped = roc_curve(&scores, &y, 0).unwrap();
        prop_assert!((flipped.auc - (1.0 - roc.auc)).abs() < 1e-12);
    }

    #[test]
    fn metric_identities(tp in 0usize..500, fp in 0usize..500, tn in 0usize..500, fn_ in 0usize..500) {
        prop_assume!(tp + fp + tn + fn_ > 0);
        let cm = ConfusionMatrix::new(tp, fp, tn, fn_);
        let r = metrics_report(&cm);
        for v in r.values() {
            prop_assert!((0.0..=100.0).contains(&v));
        }
        let (p, n) = ((tp + fn_) as f64, (fp + tn) as f64);
        if p > 0.0 && n > 0.0 {
            let mixed = (r.sensitivity * p + r.specificity * n) / (p + n);
            prop_assert!((mixed - r.accuracy).abs() < 1e-9);
        }
        if r.precision + r.sensitivity > 0.0 {
            let h = 2.0 * r.precision * r.sensitivity / (r.precision + r.sensitivity);
            prop_assert!((h - r.f1).abs() < 1e-9);
        }
    }

    #[test]
    fn best_split_matches_exhaustive_search(
        n in 2usize..50,
        p in 1usize..5,
        levels in 2usize..8,
        seed in any::<u64>(),
    ) {
        let mut rng = SplitMix64::new(seed);
        let ds = random_integer_dataset(n, p, levels, &mut rng);
        let rows: Vec<usize> = (0..n).collect();
        let features: Vec<usize> = (0..p).collect();
        let got = best_split(&rows, &features, &ds);
        let want = common::brute_force_split(&ds, &rows, &features, MIN_IMPURITY_DECREASE);
        match (got, want) {
            (None, None) => {}
            (Some(g), Some((f, t, d))) => {
                prop_assert_eq!(g.impurity_decrease, d);
                prop_assert_eq!(g.feature, f);
                prop_assert_eq!(g.threshold, t);

                // Weighted child impurity never exceeds the parent's.
                let x = ds.features();
                let y = ds.labels();
                let counts = |keep: &dyn Fn(usize) -> bool| {
                    let mut c = [0usize; 2];
                    for r in (0..n).filter(|&r| keep(r)) {
                        c[y[r] as usize] += 1;
                    }
                    c
                };
                let l = counts(&|r| x.get(r, g.feature) <= g.threshold);
                let rr = counts(&|r| x.get(r, g.feature) > g.threshold);
                let parent = gini(ds.class_counts()).unwrap();
                let nl = (l[0] + l[1]) as f64;
                let nr = (rr[0] + rr[1]) as f64;
                let weighted = (nl * gini(l).unwrap() + nr * gini(rr).unwrap()) / n as f64;
                prop_assert!(weighted <= parent);
            }
            (g, w) => prop_assert!(false, "library {:?} vs oracle {:?}", g, w),
        }
    }

    #[test]
    fn forest_score_ignores_tree_order(seed in any::<u64>()) {
        let ds = common::gaussian_blobs(60, 3, 1.0, seed);
        let params = ForestParams { n_trees: 9, ..ForestParams::default() };
        let forest = fit_forest(&ds, &params, seed, 1).unwrap();
        let mut reversed: ForestModel = forest.clone();
        reversed.trees.reverse();
        for x in ds.features().row_iter() {
            prop_assert_eq!(predict_score(&forest, x).unwrap(), predict_score(&reversed, x).unwrap());
        }
    }

    #[test]
    fn training_rows_route_identically_after_monotone_transforms(seed in any::<u64>()) {
        let ds = common::gaussian_blobs(50, 2, 1.5, seed);
        let mapped: Vec<f64> = ds.features().as_slice().iter().map(|v| v.exp() * 3.0 + 1.0).collect();
        let ds2 = ds
            .with_features(Matrix::new(50, 2, mapped).unwrap(), ds.feature_names().to_vec())
            .unwrap();
        // Without bootstrap every row is a training row of every tree, and
        // training rows keep their side of each threshold.
        let params = ForestParams { n_trees: 5, bootstrap: false, ..ForestParams::default() };
        let a = fit_forest(&ds, &params, seed, 1).unwrap();
        let b = fit_forest(&ds2, &params, seed, 1).unwrap();
        for i in 0..50 {
            prop_assert_eq!(
                predict_score(&a, ds.features().row(i)).unwrap(),
                predict_score(&b, ds2.features().row(i)).unwrap()
            );
        }
    }

    #[test]
    fn eigendecomposition_reconstructs(n in 1usize..20, seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let c = random_symmetric(n, &mut rng);
        let e = eigh_symmetric(&c).unwrap();
        let v = &e.vectors;
        let vtcv = v.transpose().matmul(&c).unwrap().matmul(v).unwrap();
        prop_assert!(vtcv.max_abs_diff(&Matrix::diagonal(&e.values)) < 1e-8);
        prop_assert!(v.transpose().matmul(v).unwrap().max_abs_diff(&Matrix::identity(n)) < 1e-8);
        prop_assert!((e.values.iter().sum::<f64>() - c.trace()).abs() < 1e-8);
        for w in e.values.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
        for j in 0..n {
            let col = v.column(j);
            let big = col.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            prop_assert!(big > 0.0);
        }
    }

    #[test]
    fn pca_projection_is_centered_and_decorrelated(
        n in 3usize..40,
        p in 1usize..6,
        seed in any::<u64>(),
        standardize in any::<bool>(),
    ) {
        let mut rng = SplitMix64::new(seed);
        let x = Matrix::new(n, p, (0..n * p).map(|_| common::normal(&mut rng)).collect()).unwrap();
        let model = pca::fit(&x, ComponentPolicy::FixedK(p), standardize).unwrap();
        let z = pca::transform(&model, &x).unwrap();
        for m in z.column_means() {
            prop_assert!(m.abs() < 1e-9);
        }
        let (zc, _) = mean_center(&z).unwrap();
        let cov = covariance(&zc).unwrap();
        for i in 0..p {
            for j in 0..p {
                let want = if i == j { model.eigenvalues[i] } else { 0.0 };
                prop_assert!((cov.get(i, j) - want).abs() < 1e-8);
            }
        }
        let ratios = pca::explained_variance_ratio(&model);
        if model.total_variance > 0.0 {
            prop_assert!((ratios.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
