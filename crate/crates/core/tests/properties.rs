//! Randomized checks of the analytical routines against retraining done
//! directly in this file.

use fastcv::{
    adjust_bias, augment, centroid_distance_gaps, cv_decision_values, cv_multiclass, hat_matrix, make_folds,
    make_synthetic, naive_crossval, permutation_p_value, permutation_test_binary, CvOutputs, CvSettings, Dataset,
    FoldAveraging, Metric, NaiveTask, PermutationPlan, RidgeSpec,
};
use ndarray::{s, Array1, Array2, Axis};
use ndarray_linalg::Solve;
use proptest::prelude::*;

/// Ridge fit by the normal equations, intercept last and unpenalized.
fn ridge_refit(x: &Array2<f64>, y: &Array1<f64>, lambda: f64) -> Array1<f64> {
    let (n, p) = x.dim();
    let mut xa = Array2::<f64>::ones((n, p + 1));
    xa.slice_mut(s![.., ..p]).assign(x);
    let mut a = xa.t().dot(&xa);
    for j in 0..p {
        a[[j, j]] += lambda;
    }
    a.solve_into(xa.t().dot(y)).unwrap()
}

fn predict(x: &Array2<f64>, beta: &Array1<f64>) -> Array1<f64> {
    let p = x.ncols();
    x.dot(&beta.slice(s![..p])) + beta[p]
}

fn binary_case() -> impl Strategy<Value = (usize, usize, usize, f64, u64)> {
    (6usize..20, 1usize..8, 2usize..5, -2.0f64..1.0, any::<u64>())
        .prop_map(|(half, p, k, log_l, seed)| (2 * half, p, k, 10f64.powf(log_l), seed))
}

fn pm1(ds: &Dataset) -> Array1<f64> {
    ds.labels_pm1().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn binary_values_match_refitting((n, p, k, lambda, seed) in binary_case()) {
        let ds = make_synthetic(n, p, 2, seed).unwrap();
        let y = pm1(&ds);
        let hat = hat_matrix(&augment(ds.features()).unwrap(), &RidgeSpec::new(lambda).unwrap()).unwrap();
        let folds = make_folds(n, k, seed, Some(ds.labels())).unwrap();
        let cv = cv_decision_values(&hat, y.view(), &folds).unwrap();
        let fast = cv.decision_values().unwrap();

        let x = ds.features().to_owned();
        for f in 0..folds.n_folds() {
            let train = folds.train(f);
            let test = folds.test(f);
            let beta = ridge_refit(&x.select(Axis(0), &train), &y.select(Axis(0), &train), lambda);
            let expect = predict(&x.select(Axis(0), test), &beta);
            for (&i, e) in test.iter().zip(expect.iter()) {
                prop_assert!((fast[i] - e).abs() <= 1e-8 * (1.0 + e.abs()), "sample {i}: {} vs {e}", fast[i]);
            }
        }
    }

    #[test]
    fn adjusted_signs_match_retrained_lda((n, p, k, lambda, seed) in binary_case()) {
        let ds = make_synthetic(n, p, 2, seed).unwrap();
        let y = pm1(&ds);
        let hat = hat_matrix(&augment(ds.features()).unwrap(), &RidgeSpec::new(lambda).unwrap()).unwrap();
        let folds = make_folds(n, k, seed, Some(ds.labels())).unwrap();
        let raw = cv_decision_values(&hat, y.view(), &folds).unwrap();
        let adjusted = adjust_bias(&hat, y.view(), &folds, raw).unwrap();
        let fast = adjusted.adjusted_decision_values().unwrap();

        let naive = naive_crossval(&ds, &folds, NaiveTask::BinaryLda, lambda, CvSettings::default()).unwrap();
        let slow = naive.decision_values().unwrap();
        for i in 0..n {
            if slow[i].abs() > 1e-9 {
                prop_assert_eq!(fast[i].signum(), slow[i].signum(), "sample {}", i);
            }
        }
    }

    #[test]
    fn multiclass_labels_match_retrained_lda(
        c in 3usize..6,
        per_class in 6usize..12,
        extra in 0usize..5,
        k in 2usize..5,
        log_l in -2.0f64..1.0,
        seed in any::<u64>(),
    ) {
        let n = c * per_class;
        let p = c - 1 + extra;
        let lambda = 10f64.powf(log_l);
        let ds = make_synthetic(n, p, c, seed).unwrap();
        let hat = hat_matrix(&augment(ds.features()).unwrap(), &RidgeSpec::new(lambda).unwrap()).unwrap();
        let folds = make_folds(n, k, seed, Some(ds.labels())).unwrap();
        let fast = cv_multiclass(&hat, ds.labels(), c, &folds, FoldAveraging::Unweighted).unwrap();
        let naive = naive_crossval(&ds, &folds, NaiveTask::Multiclass, lambda, CvSettings::default()).unwrap();

        let (CvOutputs::Multiclass { predicted: a, .. }, CvOutputs::Multiclass { predicted: b, scores }) =
            (&fast.outputs, &naive.outputs)
        else {
            panic!("multiclass outputs expected");
        };
        for (f, fold_scores) in scores.iter().enumerate() {
            let gaps = centroid_distance_gaps(fold_scores).unwrap();
            for (&i, gap) in folds.test(f).iter().zip(gaps) {
                if gap > 1e-7 {
                    prop_assert_eq!(a[i], b[i], "sample {} gap {}", i, gap);
                }
            }
        }
    }

    #[test]
    fn null_values_match_rerunning_on_permuted_labels((n, p, k, lambda, seed) in binary_case()) {
        let ds = make_synthetic(n, p, 2, seed).unwrap();
        let y = pm1(&ds);
        let hat = hat_matrix(&augment(ds.features()).unwrap(), &RidgeSpec::new(lambda).unwrap()).unwrap();
        let folds = make_folds(n, k, seed, None).unwrap();
        let plan = PermutationPlan::new(n, 6, seed ^ 1).unwrap();
        let settings = CvSettings::new(Metric::Accuracy);
        let values = permutation_test_binary(&hat, y.view(), &folds, &plan, settings, true).unwrap();
        prop_assert_eq!(values.len(), 6);

        let labels = y.to_vec();
        for (t, &v) in values.iter().enumerate() {
            let yp = Array1::from(plan.apply(t, &labels).unwrap());
            let raw = cv_decision_values(&hat, yp.view(), &folds).unwrap();
            let mut adj = adjust_bias(&hat, yp.view(), &folds, raw).unwrap();
            let expect = adj.evaluate_binary(yp.as_slice().unwrap(), settings).unwrap().mean;
            prop_assert!((v - expect).abs() <= 1e-12, "permutation {t}: {v} vs {expect}");
        }
    }

    #[test]
    fn decision_values_ignore_feature_translation(
        (n, p, k, lambda, seed) in binary_case(),
        shift in -50.0f64..50.0,
    ) {
        let ds = make_synthetic(n, p, 2, seed).unwrap();
        let y = pm1(&ds);
        let folds = make_folds(n, k, seed, Some(ds.labels())).unwrap();
        let values = |x: &Array2<f64>| {
            let hat = hat_matrix(&augment(x.view()).unwrap(), &RidgeSpec::new(lambda).unwrap()).unwrap();
            let raw = cv_decision_values(&hat, y.view(), &folds).unwrap();
            adjust_bias(&hat, y.view(), &folds, raw).unwrap().adjusted_decision_values().unwrap().clone()
        };
        let base = values(&ds.features().to_owned());
        let moved = values(&(&ds.features() + shift));
        for (a, b) in base.iter().zip(moved.iter()) {
            prop_assert!((a - b).abs() <= 1e-7 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn decision_values_are_linear_in_the_response(
        (n, p, k, lambda, seed) in binary_case(),
        scale in -5.0f64..5.0,
    ) {
        let ds = make_synthetic(n, p, 2, seed).unwrap();
        let y = pm1(&ds);
        let hat = hat_matrix(&augment(ds.features()).unwrap(), &RidgeSpec::new(lambda).unwrap()).unwrap();
        let folds = make_folds(n, k, seed, None).unwrap();
        let base = cv_decision_values(&hat, y.view(), &folds).unwrap();
        let scaled = cv_decision_values(&hat, (&y * scale).view(), &folds).unwrap();
        for (a, b) in base.decision_values().unwrap().iter().zip(scaled.decision_values().unwrap()) {
            prop_assert!((a * scale - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn stratified_folds_partition_and_balance(
        c in 2usize..5,
        per_class in 3usize..15,
        k in 2usize..4,
        seed in any::<u64>(),
    ) {
        let n = c * per_class;
        let ds = make_synthetic(n, 1, c, seed).unwrap();
        let folds = make_folds(n, k, seed, Some(ds.labels())).unwrap();
        let mut seen = vec![0usize; n];
        for f in 0..k {
            for &i in folds.test(f) {
                seen[i] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&s| s == 1));
        for class in 1..=c {
            let counts: Vec<usize> = (0..k)
                .map(|f| folds.test(f).iter().filter(|&&i| ds.labels()[i] == class).count())
                .collect();
            let lo = *counts.iter().min().unwrap();
            let hi = *counts.iter().max().unwrap();
            prop_assert!(hi - lo <= 1, "class {class}: {counts:?}");
        }
    }

    #[test]
    fn p_values_lie_in_range(observed in 0.0f64..1.0, null in prop::collection::vec(0.0f64..1.0, 0..200)) {
        let p = permutation_p_value(observed, &null);
        prop_assert!(p >= 1.0 / (null.len() + 1) as f64 && p <= 1.0);
        let above = null.iter().filter(|&&v| v >= observed).count();
        prop_assert!((p * (null.len() + 1) as f64 - (above + 1) as f64).abs() < 1e-9);
    }
}

#[test]
fn leave_one_out_matches_the_scalar_shortcut() {
    let ds = make_synthetic(25, 4, 2, 11).unwrap();
    let y = pm1(&ds);
    let lambda = 0.3;
    let hat = hat_matrix(&augment(ds.features()).unwrap(), &RidgeSpec::new(lambda).unwrap()).unwrap();
    let folds = make_folds(25, 25, 0, None).unwrap();
    let cv = cv_decision_values(&hat, y.view(), &folds).unwrap();
    let h = hat.h();
    let fit = h.dot(&y);
    for i in 0..25 {
        let loo_residual = (y[i] - fit[i]) / (1.0 - h[[i, i]]);
        let expect = y[i] - loo_residual;
        assert!((cv.decision_values().unwrap()[i] - expect).abs() < 1e-10);
    }
}
