//! Analytical cross-validation for ridge regression and binary LDA.
//!
//! One full-data fit gives the hat matrix `H`. For a test fold `Te` with
//! training complement `Tr`, and full-data residuals `ê = y − Hy`,
//!
//! ```text
//! ė_Te = (I − H_Te)⁻¹ ê_Te        ẏ_Te = y_Te − ė_Te
//! ė_Tr = ê_Tr + H_Tr,Te ė_Te      ẏ_Tr = y_Tr − ė_Tr
//! ```
//!
//! are exactly the test and training fits of a model retrained on `Tr`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use ndarray_linalg::{CholeskyInto, UPLO};

use crate::cv::{CvOutputs, CvResult, CvSettings};
use crate::dataset::check_pm1;
use crate::error::{invalid, Error, Result};
use crate::lsq::{cholesky_solve, HatMatrix, RCOND_THRESHOLD};
use crate::synthgen::{FoldPartition, PermutationPlan};

/// Per-fold factorizations of `I − H_Te`, computed once and reused for
/// every response (indicator column, permuted label vector).
#[derive(Debug, Clone)]
pub(crate) struct FoldSolver {
    folds: Vec<FoldBlock>,
    n_samples: usize,
}

#[derive(Debug, Clone)]
struct FoldBlock {
    test: Vec<usize>,
    train: Vec<usize>,
    /// Lower Cholesky factor of `I − H_Te`.
    chol: Array2<f64>,
    /// `H_Tr,Te`.
    h_tr_te: Array2<f64>,
}

/// Fits of one fold's retrained model: rows of `train` follow the ascending
/// training indices, rows of `test` the fold's test indices.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldFits {
    pub train: Array2<f64>,
    pub test: Array2<f64>,
}

impl FoldSolver {
    pub(crate) fn new(hat: &HatMatrix, partition: &FoldPartition) -> Result<Self> {
        let n = hat.n_samples();
        if partition.n_samples() != n {
            return Err(invalid(format!(
                "partition covers {} samples, hat matrix has {n}",
                partition.n_samples()
            )));
        }
        let h = hat.h();
        let mut folds = Vec::with_capacity(partition.n_folds());
        for (k, test) in partition.folds().iter().enumerate() {
            let train = partition.train(k);
            let h_te = h.select(Axis(0), test).select(Axis(1), test);
            let g = Array2::<f64>::eye(test.len()) - &h_te;
            let chol = g.cholesky_into(UPLO::Lower).map_err(|_| Error::SingularFold {
                fold: Some(k),
                rcond: 0.0,
            })?;
            // ‖I − H_Te‖ ≤ 1, so the smallest squared pivot bounds its conditioning
            let lo = chol.diag().iter().copied().fold(f64::INFINITY, f64::min);
            let rcond = lo * lo;
            if !(rcond >= RCOND_THRESHOLD) {
                return Err(Error::SingularFold { fold: Some(k), rcond });
            }
            let h_tr_te = h.select(Axis(0), &train).select(Axis(1), test);
            folds.push(FoldBlock {
                test: test.clone(),
                train,
                chol,
                h_tr_te,
            });
        }
        Ok(Self { folds, n_samples: n })
    }

    pub(crate) fn test(&self, k: usize) -> &[usize] {
        &self.folds[k].test
    }

    pub(crate) fn train(&self, k: usize) -> &[usize] {
        &self.folds[k].train
    }

    pub(crate) fn fold_lists(&self) -> Vec<Vec<usize>> {
        self.folds.iter().map(|f| f.test.clone()).collect()
    }

    /// Cross-validated test fits of every fold, for an `N × R` response.
    pub(crate) fn test_fits(&self, hat: &HatMatrix, y: ArrayView2<'_, f64>) -> Result<Vec<Array2<f64>>> {
        let resid = self.residuals(hat, y)?;
        self.folds
            .iter()
            .map(|f| {
                let (y_te, _) = self.fold_test(f, y, &resid)?;
                Ok(y_te)
            })
            .collect()
    }

    /// Cross-validated test and training fits of every fold.
    pub(crate) fn fits(&self, hat: &HatMatrix, y: ArrayView2<'_, f64>) -> Result<Vec<FoldFits>> {
        let resid = self.residuals(hat, y)?;
        self.folds
            .iter()
            .map(|f| {
                let (test, e_te) = self.fold_test(f, y, &resid)?;
                let e_tr = resid.select(Axis(0), &f.train) + f.h_tr_te.dot(&e_te);
                let train = y.select(Axis(0), &f.train) - e_tr;
                Ok(FoldFits { train, test })
            })
            .collect()
    }

    fn residuals(&self, hat: &HatMatrix, y: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if y.nrows() != self.n_samples {
            return Err(invalid(format!(
                "{} responses for {} samples",
                y.nrows(),
                self.n_samples
            )));
        }
        Ok(&y - &hat.fit_multi(y))
    }

    fn fold_test(
        &self,
        f: &FoldBlock,
        y: ArrayView2<'_, f64>,
        resid: &Array2<f64>,
    ) -> Result<(Array2<f64>, Array2<f64>)> {
        let e_te = cholesky_solve(&f.chol, &resid.select(Axis(0), &f.test))?;
        Ok((y.select(Axis(0), &f.test) - &e_te, e_te))
    }
}

fn column(y: ArrayView1<'_, f64>) -> ArrayView2<'_, f64> {
    y.insert_axis(Axis(1))
}

/// Scatters per-fold test values back into sample order.
fn assemble(solver: &FoldSolver, per_fold: &[Array1<f64>]) -> Array1<f64> {
    let mut out = Array1::zeros(solver.n_samples);
    for (k, vals) in per_fold.iter().enumerate() {
        for (&i, &v) in solver.test(k).iter().zip(vals) {
            out[i] = v;
        }
    }
    out
}

/// Cross-validated decision values `ẏ` for every sample, with no model
/// refitted. `y` may be ±1 labels or any continuous response. The returned
/// result is not yet scored; see [`CvResult::evaluate_binary`].
pub fn cv_decision_values(hat: &HatMatrix, y: ArrayView1<'_, f64>, partition: &FoldPartition) -> Result<CvResult> {
    let solver = FoldSolver::new(hat, partition)?;
    cv_with_solver(&solver, hat, y, false)
}

/// Replaces the regression bias with the class-midpoint bias in every fold.
///
/// For each fold the training fits `ẏ_Tr` are recovered without refitting;
/// their class-wise means are `wᵀm₁ + b_LR` and `wᵀm₂ + b_LR`, so the test
/// values are shifted by minus the average of the two means.
pub fn adjust_bias(
    hat: &HatMatrix,
    labels_pm1: ArrayView1<'_, f64>,
    partition: &FoldPartition,
    raw: CvResult,
) -> Result<CvResult> {
    if raw.decision_values().is_none() {
        return Err(invalid("bias adjustment needs binary decision values"));
    }
    let solver = FoldSolver::new(hat, partition)?;
    let adjusted = cv_with_solver(&solver, hat, labels_pm1, true)?;
    let mut out = raw;
    if let CvOutputs::Binary { adjusted: slot, .. } = &mut out.outputs {
        *slot = adjusted.adjusted_decision_values().cloned();
    }
    out.performance = None;
    Ok(out)
}

fn cv_with_solver(solver: &FoldSolver, hat: &HatMatrix, y: ArrayView1<'_, f64>, adjust: bool) -> Result<CvResult> {
    let (raw, adjusted) = fold_values(solver, hat, y, adjust)?;
    Ok(CvResult {
        folds: solver.fold_lists(),
        outputs: CvOutputs::Binary {
            decision_values: assemble(solver, &raw),
            adjusted: adjusted.map(|a| assemble(solver, &a)),
        },
        performance: None,
    })
}

/// Midpoint shift `b_LDA − b_LR` from training fits and ±1 training labels.
fn midpoint_shift(fits_tr: ArrayView1<'_, f64>, y_tr: ArrayView1<'_, f64>, fold: usize) -> Result<f64> {
    let (mut s_pos, mut n_pos, mut s_neg, mut n_neg) = (0.0, 0usize, 0.0, 0usize);
    for (&f, &y) in fits_tr.iter().zip(y_tr) {
        if y > 0.0 {
            s_pos += f;
            n_pos += 1;
        } else {
            s_neg += f;
            n_neg += 1;
        }
    }
    if n_pos == 0 {
        return Err(Error::DegenerateFold { fold, class: 1 });
    }
    if n_neg == 0 {
        return Err(Error::DegenerateFold { fold, class: 2 });
    }
    Ok(-(s_pos / n_pos as f64 + s_neg / n_neg as f64) / 2.0)
}

type FoldValues = (Vec<Array1<f64>>, Option<Vec<Array1<f64>>>);

fn fold_values(solver: &FoldSolver, hat: &HatMatrix, y: ArrayView1<'_, f64>, adjust: bool) -> Result<FoldValues> {
    if !adjust {
        let fits = solver.test_fits(hat, column(y))?;
        return Ok((fits.into_iter().map(|f| f.column(0).to_owned()).collect(), None));
    }
    check_pm1(y.as_slice().ok_or_else(|| invalid("labels must be contiguous"))?)?;
    let fits = solver.fits(hat, column(y))?;
    let mut raw = Vec::with_capacity(fits.len());
    let mut adjusted = Vec::with_capacity(fits.len());
    for (k, f) in fits.into_iter().enumerate() {
        let y_tr = y.select(Axis(0), solver.train(k));
        let shift = midpoint_shift(f.train.column(0), y_tr.view(), k)?;
        let te = f.test.column(0).to_owned();
        adjusted.push(&te + shift);
        raw.push(te);
    }
    Ok((raw, Some(adjusted)))
}

/// Fold-averaged metric for every permutation in `plan`, computing `H` and
/// the per-fold factorizations once. Entry 0 is the observed value.
pub fn permutation_test_binary(
    hat: &HatMatrix,
    labels_pm1: ArrayView1<'_, f64>,
    partition: &FoldPartition,
    plan: &PermutationPlan,
    settings: CvSettings,
    adjust: bool,
) -> Result<Vec<f64>> {
    let y = labels_pm1
        .as_slice()
        .ok_or_else(|| invalid("labels must be contiguous"))?;
    check_pm1(y)?;
    let solver = FoldSolver::new(hat, partition)?;
    (0..plan.n_permutations())
        .map(|t| {
            let yp = Array1::from(plan.apply(t, y)?);
            let mut cv = cv_with_solver(&solver, hat, yp.view(), adjust)?;
            let yp = yp.as_slice().expect("owned array");
            Ok(cv.evaluate_binary(yp, settings)?.mean)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Dataset;
    use crate::lda::{fit_binary_lda, naive_crossval, NaiveTask, Regularization};
    use crate::lsq::{augment, hat_matrix, woodbury_train_inverse, RidgeSpec};
    use crate::metrics::{auc, Metric};
    use crate::synthgen::{make_folds, make_synthetic, SyntheticConfig};
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn setup(ds: &Dataset, k: usize, lambda: f64, seed: u64) -> (HatMatrix, FoldPartition, Array1<f64>) {
        let hat = hat_matrix(&augment(ds.features()).unwrap(), &RidgeSpec::new(lambda).unwrap()).unwrap();
        let part = make_folds(ds.n_samples(), k, seed, Some(ds.labels())).unwrap();
        (hat, part, ds.labels_pm1().unwrap())
    }

    fn max_abs(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
        (a - b).iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    #[test]
    fn matches_refit_oracle() {
        let ds = make_synthetic(8, 3, 2, 17).unwrap();
        let (hat, part, y) = setup(&ds, 4, 0.5, 17);
        let fast = cv_decision_values(&hat, y.view(), &part).unwrap();
        let naive = naive_crossval(&ds, &part, NaiveTask::BinaryRegressionForm, 0.5, CvSettings::default()).unwrap();
        assert!(max_abs(fast.decision_values().unwrap(), naive.decision_values().unwrap()) <= 1e-10);
    }

    #[test]
    fn exact_full_fit_leaves_test_values_alone() {
        // y is linear in x, so with λ = 0 every residual vanishes
        let x = array![[0.0], [1.0], [2.0], [3.0], [4.0], [5.0]];
        let y = array![1.0, 3.0, 5.0, 7.0, 9.0, 11.0];
        let hat = hat_matrix(&augment(x.view()).unwrap(), &RidgeSpec::new(0.0).unwrap()).unwrap();
        let part = FoldPartition::from_folds(vec![vec![0, 3], vec![1, 4], vec![2, 5]], 6).unwrap();
        let cv = cv_decision_values(&hat, y.view(), &part).unwrap();
        assert!(max_abs(cv.decision_values().unwrap(), &y) <= 1e-10);
    }

    #[test]
    fn leave_one_out_scalar_leverage() {
        let ds = make_synthetic(10, 2, 2, 4).unwrap();
        let (hat, _, y) = setup(&ds, 2, 0.3, 4);
        let loo = make_folds(10, 10, 0, None).unwrap();
        let cv = cv_decision_values(&hat, y.view(), &loo).unwrap();
        let fitted = hat.fit(y.view());
        for i in 0..10 {
            let h = hat.h()[[i, i]];
            let e = (y[i] - fitted[i]) / (1.0 - h);
            assert_abs_diff_eq!(cv.decision_values().unwrap()[i], y[i] - e, epsilon = 1e-12);
        }
    }

    #[test]
    fn intercept_only_model_predicts_training_mean() {
        // a zero feature column leaves only the unpenalized intercept
        let x = Array2::<f64>::zeros((5, 1));
        let y = array![1.0, -1.0, 1.0, -1.0, 1.0];
        let hat = hat_matrix(&augment(x.view()).unwrap(), &RidgeSpec::new(1.0).unwrap()).unwrap();
        let loo = make_folds(5, 5, 0, None).unwrap();
        let cv = cv_decision_values(&hat, y.view(), &loo).unwrap();
        for i in 0..5 {
            let rest: f64 = (0..5).filter(|&j| j != i).map(|j| y[j]).sum::<f64>() / 4.0;
            assert_abs_diff_eq!(cv.decision_values().unwrap()[i], rest, epsilon = 1e-12);
        }
    }

    #[test]
    fn updated_weights_match_refit() {
        let ds = make_synthetic(20, 4, 2, 8).unwrap();
        let design = augment(ds.features()).unwrap();
        let ridge = RidgeSpec::new(0.7).unwrap();
        let hat = hat_matrix(&design, &ridge).unwrap();
        let y = ds.labels_pm1().unwrap();
        let part = make_folds(20, 4, 8, Some(ds.labels())).unwrap();
        let beta_full = crate::lsq::fit_ridge(&design, y.view(), &ridge)
            .unwrap()
            .beta
            .column(0)
            .to_owned();
        let cv = cv_decision_values(&hat, y.view(), &part).unwrap();
        let dv = cv.decision_values().unwrap();
        for k in 0..part.n_folds() {
            let test = part.test(k);
            let x_te = design.rows(test);
            // β̇ = β̂ − S X̃_Teᵀ ė_Te
            let e_te: Array1<f64> = test.iter().map(|&i| y[i] - dv[i]).collect();
            let beta_dot = &beta_full - &hat.s().dot(&x_te.t().dot(&e_te));
            let train = part.train(k);
            let sub = augment(ds.features().select(Axis(0), &train).view()).unwrap();
            let refit = crate::lsq::fit_ridge(&sub, y.select(Axis(0), &train).view(), &ridge).unwrap();
            let d = (&beta_dot - &refit.beta.column(0))
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(d <= 1e-9, "fold {k}: {d}");
            // the Woodbury route to S_Tr gives the same weights
            let s_tr = woodbury_train_inverse(hat.s(), x_te.view()).unwrap();
            let xy_tr = sub.matrix().t().dot(&y.select(Axis(0), &train));
            let d2 = (&s_tr.dot(&xy_tr) - &refit.beta.column(0))
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(d2 <= 1e-9, "fold {k}: {d2}");
        }
    }

    #[test]
    fn balanced_training_folds_need_no_shift() {
        let ds = make_synthetic(20, 3, 2, 2).unwrap();
        let (hat, part, y) = setup(&ds, 5, 0.4, 2);
        let counts = crate::synthgen::fold_class_counts(&part, ds.labels(), 2);
        assert!(counts.iter().all(|c| c[0] == c[1]));
        let raw = cv_decision_values(&hat, y.view(), &part).unwrap();
        let adj = adjust_bias(&hat, y.view(), &part, raw.clone()).unwrap();
        assert!(max_abs(raw.decision_values().unwrap(), adj.adjusted_decision_values().unwrap()) <= 1e-10);
    }

    #[test]
    fn mirrored_classes_keep_their_values() {
        let half = array![[1.0, 0.5], [2.0, -0.3], [0.4, 1.2], [1.5, 0.9]];
        let x = ndarray::concatenate![Axis(0), half, -&half];
        let ds = Dataset::new(x, vec![1, 1, 1, 1, 2, 2, 2, 2], 2).unwrap();
        let hat = hat_matrix(&augment(ds.features()).unwrap(), &RidgeSpec::new(0.2).unwrap()).unwrap();
        let part = FoldPartition::from_folds(vec![vec![0, 4], vec![1, 5], vec![2, 6], vec![3, 7]], 8).unwrap();
        let y = ds.labels_pm1().unwrap();
        let raw = cv_decision_values(&hat, y.view(), &part).unwrap();
        let adj = adjust_bias(&hat, y.view(), &part, raw.clone()).unwrap();
        assert!(max_abs(raw.decision_values().unwrap(), adj.adjusted_decision_values().unwrap()) <= 1e-12);
    }

    #[test]
    fn adjusted_signs_follow_classical_lda() {
        for seed in 0..10 {
            let ds = SyntheticConfig::new(16, 3, 2)
                .class_weights(vec![3.0, 1.0])
                .generate(seed)
                .unwrap()
                .dataset;
            let lambda = 0.5;
            let (hat, part, y) = setup(&ds, 2, lambda, seed);
            let raw = cv_decision_values(&hat, y.view(), &part).unwrap();
            let adj = adjust_bias(&hat, y.view(), &part, raw).unwrap();
            let naive = naive_crossval(&ds, &part, NaiveTask::BinaryLda, lambda, CvSettings::default()).unwrap();
            let a = adj.adjusted_decision_values().unwrap();
            let b = naive.decision_values().unwrap();
            for i in 0..16 {
                if a[i].abs() > 1e-10 {
                    assert_eq!(a[i] >= 0.0, b[i] >= 0.0, "seed {seed} sample {i}");
                }
            }
            // the adjusted values are the classical LDA values scaled by a
            // positive per-fold factor
            for k in 0..part.n_folds() {
                let t = part.test(k);
                let ratio = a[t[0]] / b[t[0]];
                assert!(ratio > 0.0);
                for &i in t {
                    assert_abs_diff_eq!(a[i], ratio * b[i], epsilon = 1e-9 * (1.0 + b[i].abs()));
                }
            }
        }
    }

    #[test]
    fn six_versus_two_folds() {
        let ds = SyntheticConfig::new(16, 2, 2)
            .class_weights(vec![3.0, 1.0])
            .generate(3)
            .unwrap()
            .dataset;
        let part = make_folds(16, 2, 3, Some(ds.labels())).unwrap();
        // 12 vs 4 overall, stratified halves train on 6 vs 2
        for counts in crate::synthgen::fold_class_counts(&part, ds.labels(), 2) {
            assert_eq!(counts, vec![6, 2]);
        }
        let hat = hat_matrix(&augment(ds.features()).unwrap(), &RidgeSpec::new(0.1).unwrap()).unwrap();
        let y = ds.labels_pm1().unwrap();
        let raw = cv_decision_values(&hat, y.view(), &part).unwrap();
        let adj = adjust_bias(&hat, y.view(), &part, raw).unwrap();
        for k in 0..2 {
            let train = ds.subset(&part.train(k));
            let model = fit_binary_lda(&train, 0.1, Regularization::Ridge).unwrap();
            let test_x = ds.features().select(Axis(0), part.test(k));
            let oracle = crate::lda::decision_values(&model, test_x.view()).unwrap();
            for (j, &i) in part.test(k).iter().enumerate() {
                let v = adj.adjusted_decision_values().unwrap()[i];
                if v.abs() > 1e-10 {
                    assert_eq!(v >= 0.0, oracle[j] >= 0.0);
                }
            }
        }
    }

    #[test]
    fn per_fold_auc_unchanged_by_adjustment() {
        let ds = SyntheticConfig::new(40, 5, 2)
            .class_weights(vec![1.0, 3.0])
            .generate(5)
            .unwrap()
            .dataset;
        let (hat, part, y) = setup(&ds, 4, 1.0, 5);
        let raw = cv_decision_values(&hat, y.view(), &part).unwrap();
        let adj = adjust_bias(&hat, y.view(), &part, raw.clone()).unwrap();
        for t in part.folds() {
            let yy: Vec<f64> = t.iter().map(|&i| y[i]).collect();
            let r: Vec<f64> = t.iter().map(|&i| raw.decision_values().unwrap()[i]).collect();
            let a: Vec<f64> = t.iter().map(|&i| adj.adjusted_decision_values().unwrap()[i]).collect();
            assert_eq!(auc(&r, &yy).unwrap(), auc(&a, &yy).unwrap());
        }
    }

    #[test]
    fn adjustment_needs_both_classes_in_training() {
        let ds = Dataset::new(array![[0.0], [1.0], [2.0], [3.0]], vec![1, 1, 2, 2], 2).unwrap();
        let hat = hat_matrix(&augment(ds.features()).unwrap(), &RidgeSpec::new(1.0).unwrap()).unwrap();
        let part = FoldPartition::from_folds(vec![vec![0, 1], vec![2, 3]], 4).unwrap();
        let y = ds.labels_pm1().unwrap();
        let raw = cv_decision_values(&hat, y.view(), &part).unwrap();
        assert!(matches!(
            adjust_bias(&hat, y.view(), &part, raw),
            Err(Error::DegenerateFold { fold: 0, class: 1 })
        ));
    }

    #[test]
    fn singular_fold_is_reported() {
        // P ≥ N with λ = 0 interpolates the data, so I − H_Te vanishes
        let x = array![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let hat = hat_matrix(&augment(x.view()).unwrap(), &RidgeSpec::new(1e-15).unwrap()).unwrap();
        let part = make_folds(3, 3, 0, None).unwrap();
        let y = array![1.0, -1.0, 1.0];
        assert!(matches!(
            cv_decision_values(&hat, y.view(), &part),
            Err(Error::SingularFold { fold: Some(_), .. })
        ));
    }

    #[test]
    fn permutation_entries_match_refit_loop() {
        let ds = make_synthetic(24, 4, 2, 31).unwrap();
        // folds of 8 keep both classes under every permutation drawn here
        let (hat, part, y) = setup(&ds, 3, 0.5, 31);
        let plan = PermutationPlan::new(24, 12, 31).unwrap();
        for metric in [Metric::Accuracy, Metric::Auc] {
            let settings = CvSettings::new(metric);
            let fast = permutation_test_binary(&hat, y.view(), &part, &plan, settings, false).unwrap();
            let naive =
                crate::lda::naive_permutation_test(&ds, &part, &plan, NaiveTask::BinaryRegressionForm, 0.5, settings)
                    .unwrap();
            for (a, b) in fast.iter().zip(&naive) {
                assert_abs_diff_eq!(*a, *b, epsilon = 1e-10);
            }
            let mut cv = cv_decision_values(&hat, y.view(), &part).unwrap();
            assert_eq!(
                fast[0],
                cv.evaluate_binary(y.as_slice().unwrap(), settings).unwrap().mean
            );
        }
        // adjusted permutations track the classical LDA refit loop
        let settings = CvSettings::new(Metric::Accuracy);
        let fast = permutation_test_binary(&hat, y.view(), &part, &plan, settings, true).unwrap();
        let naive = crate::lda::naive_permutation_test(&ds, &part, &plan, NaiveTask::BinaryLda, 0.5, settings).unwrap();
        assert_eq!(fast, naive);
    }

    #[test]
    fn hat_does_not_depend_on_labels() {
        let ds = make_synthetic(12, 3, 2, 6).unwrap();
        let ridge = RidgeSpec::new(0.3).unwrap();
        let a = hat_matrix(&augment(ds.features()).unwrap(), &ridge).unwrap();
        let plan = PermutationPlan::new(12, 2, 6).unwrap();
        let permuted = ds.with_labels(plan.apply(1, ds.labels()).unwrap()).unwrap();
        let b = hat_matrix(&augment(permuted.features()).unwrap(), &ridge).unwrap();
        assert_eq!(a.h(), b.h());
    }

    #[test]
    fn rejects_mismatched_sizes_and_bad_labels() {
        let ds = make_synthetic(10, 2, 2, 1).unwrap();
        let (hat, _, y) = setup(&ds, 2, 0.3, 1);
        let other = make_folds(12, 3, 0, None).unwrap();
        assert!(cv_decision_values(&hat, y.view(), &other).is_err());
        let part = make_folds(10, 2, 0, None).unwrap();
        let plan = PermutationPlan::new(10, 2, 0).unwrap();
        let bad = Array1::from_elem(10, 0.5);
        assert!(permutation_test_binary(&hat, bad.view(), &part, &plan, CvSettings::default(), false).is_err());
    }
}
