//! Classical LDA and the retrain-per-fold cross-validation loops.
//!
//! This is the "standard approach": every fold refits its model from the
//! training rows. It is the reference the analytical routines are checked
//! against and the baseline the benchmark times.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use ndarray_linalg::{Eigh, UPLO};

use crate::cv::{CvOutputs, CvResult, CvSettings};
use crate::dataset::{labels_to_pm1, Dataset};
use crate::error::{invalid, Error, Result};
use crate::lsq::{augment, cholesky_solve, factor_regularized, fit_ridge, ModelWeights, RidgeSpec};
use crate::multiclass::{classify_nearest_centroid, DiscriminantScores};
use crate::synthgen::{FoldPartition, PermutationPlan};

/// Within-class and between-classes scatter.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPair {
    pub s_w: Array2<f64>,
    pub s_b: Array2<f64>,
}

/// Class means (`C × P`), grand mean and class counts. Fails if a class is empty.
pub fn class_means(dataset: &Dataset) -> Result<(Array2<f64>, Array1<f64>, Vec<usize>)> {
    let x = dataset.features();
    let counts = dataset.class_counts();
    if let Some(j) = counts.iter().position(|&c| c == 0) {
        return Err(Error::DegenerateClass { class: j + 1 });
    }
    let mut means = Array2::<f64>::zeros((dataset.n_classes(), dataset.n_features()));
    for (row, &l) in x.rows().into_iter().zip(dataset.labels()) {
        let mut m = means.row_mut(l - 1);
        m += &row;
    }
    for (mut m, &c) in means.rows_mut().into_iter().zip(&counts) {
        m /= c as f64;
    }
    let grand = x.mean_axis(Axis(0)).expect("non-empty dataset");
    Ok((means, grand, counts))
}

/// Rows minus their class mean.
fn class_centered(dataset: &Dataset, means: &Array2<f64>) -> Array2<f64> {
    let mut xc = dataset.features().to_owned();
    for (mut row, &l) in xc.rows_mut().into_iter().zip(dataset.labels()) {
        row -= &means.row(l - 1);
    }
    xc
}

fn within_scatter(dataset: &Dataset, means: &Array2<f64>) -> Array2<f64> {
    let xc = class_centered(dataset, means);
    let sw = xc.t().dot(&xc);
    (&sw + &sw.t()) * 0.5
}

/// `S_w = Σ_j Σ_{i∈j} (x_i − m_j)(x_i − m_j)ᵀ`, `S_b = Σ_j n_j (m_j − m̄)(m_j − m̄)ᵀ`.
pub fn scatter_matrices(dataset: &Dataset) -> Result<ScatterPair> {
    let (means, grand, counts) = class_means(dataset)?;
    let s_w = within_scatter(dataset, &means);
    let p = dataset.n_features();
    let mut s_b = Array2::<f64>::zeros((p, p));
    for (m, &n) in means.rows().into_iter().zip(&counts) {
        let d = (&m - &grand).insert_axis(Axis(1));
        s_b = s_b + d.dot(&d.t()) * n as f64;
    }
    Ok(ScatterPair { s_w, s_b })
}

/// Two-class between scatter `N₁N₂/N (m₁ − m₂)(m₁ − m₂)ᵀ`.
pub fn between_scatter_two_class(dataset: &Dataset) -> Result<Array2<f64>> {
    if dataset.n_classes() != 2 {
        return Err(invalid("two-class formula needs exactly two classes"));
    }
    let (means, _, counts) = class_means(dataset)?;
    let d = (&means.row(0) - &means.row(1)).insert_axis(Axis(1));
    let n = dataset.n_samples() as f64;
    Ok(d.dot(&d.t()) * (counts[0] * counts[1]) as f64 / n)
}

/// How the within-class scatter is regularized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularization {
    /// `S_w + λI`, `λ ≥ 0`.
    Ridge,
    /// `(1 − λ) S_w + λνI` with `ν = trace(S_w)/P`, `λ ∈ [0, 1]`.
    Shrinkage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryLdaModel {
    pub w: Array1<f64>,
    /// Bias placing the threshold midway between the projected class means.
    pub b_lda: f64,
    /// Bias of the least-squares fit, when the model came from regression.
    pub b_lr: Option<f64>,
    pub m1: Array1<f64>,
    pub m2: Array1<f64>,
    pub grand_mean: Array1<f64>,
}

impl BinaryLdaModel {
    /// Reads `w` and `b_LR` off a ridge fit on ±1 targets and recomputes the
    /// midpoint bias from the class means of `dataset`.
    pub fn from_regression(weights: &ModelWeights, dataset: &Dataset) -> Result<Self> {
        let (means, grand, _) = binary_means(dataset)?;
        let w = weights.weights(0).to_owned();
        let m1 = means.row(0).to_owned();
        let m2 = means.row(1).to_owned();
        let b_lda = -w.dot(&(&m1 + &m2)) / 2.0;
        Ok(Self {
            w,
            b_lda,
            b_lr: Some(weights.bias(0)),
            m1,
            m2,
            grand_mean: grand,
        })
    }
}

fn binary_means(dataset: &Dataset) -> Result<(Array2<f64>, Array1<f64>, Vec<usize>)> {
    if dataset.n_classes() != 2 {
        return Err(invalid(format!(
            "binary LDA needs 2 classes, dataset declares {}",
            dataset.n_classes()
        )));
    }
    class_means(dataset)
}

fn add_to_diagonal(a: &mut Array2<f64>, v: f64) {
    for i in 0..a.nrows() {
        a[[i, i]] += v;
    }
}

/// Classical two-class LDA, `w = S_reg⁻¹ (m₁ − m₂)` with the midpoint bias.
pub fn fit_binary_lda(dataset: &Dataset, lambda: f64, mode: Regularization) -> Result<BinaryLdaModel> {
    let (means, grand, _) = binary_means(dataset)?;
    let mut a = within_scatter(dataset, &means);
    let effective = match mode {
        Regularization::Ridge => {
            if !lambda.is_finite() || lambda < 0.0 {
                return Err(invalid(format!("ridge penalty must be >= 0, got {lambda}")));
            }
            add_to_diagonal(&mut a, lambda);
            lambda
        }
        Regularization::Shrinkage => {
            if !(0.0..=1.0).contains(&lambda) {
                return Err(invalid(format!("shrinkage must lie in [0, 1], got {lambda}")));
            }
            let nu = a.diag().sum() / a.nrows() as f64;
            a *= 1.0 - lambda;
            add_to_diagonal(&mut a, lambda * nu);
            lambda * nu
        }
    };
    let m1 = means.row(0).to_owned();
    let m2 = means.row(1).to_owned();
    let l = factor_regularized(a, effective)?;
    let rhs = (&m1 - &m2).insert_axis(Axis(1));
    let w = cholesky_solve(&l, &rhs)?.column(0).to_owned();
    let b_lda = -w.dot(&(&m1 + &m2)) / 2.0;
    Ok(BinaryLdaModel {
        w,
        b_lda,
        b_lr: None,
        m1,
        m2,
        grand_mean: grand,
    })
}

/// `X w + b_LDA`.
pub fn decision_values(model: &BinaryLdaModel, features: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
    if features.ncols() != model.w.len() {
        return Err(invalid(format!(
            "model has {} weights, data has {} columns",
            model.w.len(),
            features.ncols()
        )));
    }
    Ok(features.dot(&model.w) + model.b_lda)
}

/// Solves `A v = μ B v` for symmetric `A` and symmetric positive definite
/// `B` by Cholesky reduction to a standard symmetric problem. Eigenvalues
/// come back in descending order, eigenvectors as `B`-orthonormal columns
/// with their largest-magnitude entry positive.
pub fn generalized_eigh(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = a.nrows();
    if a.dim() != (n, n) || b.dim() != (n, n) {
        return Err(invalid(
            "generalized eigenproblem needs two square matrices of equal size",
        ));
    }
    let l = factor_regularized(b.to_owned(), 1.0)?;
    use ndarray_linalg::{Diag, SolveTriangular};
    let y = l.solve_triangular(UPLO::Lower, Diag::NonUnit, &a.to_owned())?; // L⁻¹ A
    let c = l.solve_triangular(UPLO::Lower, Diag::NonUnit, &y.t().to_owned())?; // L⁻¹ A L⁻ᵀ
    let c = (&c + &c.t()) * 0.5;
    let (vals, vecs) = c.eigh(UPLO::Lower)?;
    let lt = l.t().to_owned();
    let w = lt.solve_triangular(UPLO::Upper, Diag::NonUnit, &vecs)?;
    let order: Vec<usize> = (0..n).rev().collect();
    let vals = vals.select(Axis(0), &order);
    let mut w = w.select(Axis(1), &order);
    normalize_signs(&mut w);
    Ok((vals, w))
}

/// Flips each column so its largest-magnitude entry is positive.
pub(crate) fn normalize_signs(m: &mut Array2<f64>) {
    for mut col in m.columns_mut() {
        let pivot = col
            .iter()
            .copied()
            .fold(0.0f64, |best, v| if v.abs() > best.abs() { v } else { best });
        if pivot < 0.0 {
            col.mapv_inplace(|v| -v);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MulticlassLdaModel {
    /// `P × (C−1)` discriminant coordinates, `Wᵀ(S_w + λI)W = I`.
    pub w_mat: Array2<f64>,
    /// Generalized eigenvalues, descending.
    pub eigenvalues: Array1<f64>,
    /// `C × (C−1)` projected class means.
    pub centroids: Array2<f64>,
}

impl MulticlassLdaModel {
    pub fn project(&self, features: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if features.ncols() != self.w_mat.nrows() {
            return Err(invalid(format!(
                "model expects {} features, got {}",
                self.w_mat.nrows(),
                features.ncols()
            )));
        }
        Ok(features.dot(&self.w_mat))
    }
}

/// Multi-class LDA: discriminant coordinates from `S_b W = (S_w + λI) W Λ`.
///
/// With `L Lᵀ = S_w + λI` and `S_b = G Gᵀ` (`G` has one column
/// `√n_j (m_j − m̄)` per class), the reduced matrix `L⁻¹ S_b L⁻ᵀ` equals
/// `F Fᵀ` with `F = L⁻¹ G`. Its non-zero eigenpairs come from the `C × C`
/// matrix `FᵀF`, so no `P × P` eigendecomposition is needed.
pub fn fit_multiclass_lda(dataset: &Dataset, lambda: f64) -> Result<MulticlassLdaModel> {
    let c = dataset.n_classes();
    if c < 2 {
        return Err(invalid("multi-class LDA needs at least 2 classes"));
    }
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(invalid(format!("ridge penalty must be >= 0, got {lambda}")));
    }
    let p = dataset.n_features();
    if p < c - 1 {
        return Err(invalid(format!(
            "{p} features cannot span {} discriminant coordinates",
            c - 1
        )));
    }
    let (means, grand, counts) = class_means(dataset)?;
    let mut sw = within_scatter(dataset, &means);
    add_to_diagonal(&mut sw, lambda);
    let l = factor_regularized(sw, lambda)?;

    let mut g = Array2::<f64>::zeros((p, c));
    for (j, m) in means.rows().into_iter().enumerate() {
        g.column_mut(j).assign(&((&m - &grand) * (counts[j] as f64).sqrt()));
    }
    use ndarray_linalg::{Diag, SolveTriangular};
    let f = l.solve_triangular(UPLO::Lower, Diag::NonUnit, &g)?;
    let ftf = f.t().dot(&f);
    let ftf = (&ftf + &ftf.t()) * 0.5;
    let (mu, u) = ftf.eigh(UPLO::Lower)?;

    let r = c - 1;
    let top = mu[c - 1].max(0.0);
    let mut v = Array2::<f64>::zeros((p, r));
    let mut eigenvalues = Array1::<f64>::zeros(r);
    for k in 0..r {
        let idx = c - 1 - k;
        let val = mu[idx];
        if !(val > 1e-12 * top) || top == 0.0 {
            return Err(Error::NumericalDegeneracy(format!(
                "discriminant direction {} has eigenvalue {val:.3e}",
                k + 1
            )));
        }
        v.column_mut(k).assign(&(f.dot(&u.column(idx)) / val.sqrt()));
        eigenvalues[k] = val;
    }
    let lt = l.t().to_owned();
    let mut w_mat = lt.solve_triangular(UPLO::Upper, Diag::NonUnit, &v)?;
    normalize_signs(&mut w_mat);
    let centroids = means.dot(&w_mat);
    Ok(MulticlassLdaModel {
        w_mat,
        eigenvalues,
        centroids,
    })
}

/// Nearest projected class mean; ties go to the smaller class index.
pub fn predict_multiclass(model: &MulticlassLdaModel, features: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
    let scores = DiscriminantScores {
        scores: model.project(features)?,
        centroids: model.centroids.clone(),
    };
    classify_nearest_centroid(&scores)
}

/// Which model the retraining loop fits on each training fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NaiveTask {
    /// Ridge regression on ±1 targets; test outputs are `X̃_Te β̇`.
    BinaryRegressionForm,
    /// Classical binary LDA with the midpoint bias.
    BinaryLda,
    /// Multi-class LDA with nearest-centroid prediction.
    Multiclass,
}

fn check_training_classes(train: &Dataset, fold: usize) -> Result<()> {
    match train.class_counts().iter().position(|&c| c == 0) {
        Some(j) => Err(Error::DegenerateFold { fold, class: j + 1 }),
        None => Ok(()),
    }
}

/// Cross-validation by refitting on every training fold.
pub fn naive_crossval(
    dataset: &Dataset,
    partition: &FoldPartition,
    task: NaiveTask,
    lambda: f64,
    settings: CvSettings,
) -> Result<CvResult> {
    let n = dataset.n_samples();
    if partition.n_samples() != n {
        return Err(invalid("partition and dataset sizes differ"));
    }
    let folds = partition.folds().to_vec();
    let mut result = match task {
        NaiveTask::BinaryRegressionForm | NaiveTask::BinaryLda => {
            let y = dataset.labels_pm1()?;
            let ridge = RidgeSpec::new(lambda)?;
            let mut dv = Array1::<f64>::zeros(n);
            for (k, test) in folds.iter().enumerate() {
                let train_idx = partition.train(k);
                let train = dataset.subset(&train_idx);
                check_training_classes(&train, k)?;
                let test_x = dataset.features().select(Axis(0), test);
                let vals = match task {
                    NaiveTask::BinaryRegressionForm => {
                        let design = augment(train.features())?;
                        let y_tr = y.select(Axis(0), &train_idx);
                        let beta = fit_ridge(&design, y_tr.view(), &ridge)?;
                        beta.predict(&augment(test_x.view())?).column(0).to_owned()
                    }
                    _ => {
                        let model = fit_binary_lda(&train, lambda, Regularization::Ridge)?;
                        decision_values(&model, test_x.view())?
                    }
                };
                for (&i, v) in test.iter().zip(vals) {
                    dv[i] = v;
                }
            }
            CvResult {
                folds,
                outputs: CvOutputs::Binary {
                    decision_values: dv,
                    adjusted: None,
                },
                performance: None,
            }
        }
        NaiveTask::Multiclass => {
            let mut predicted = vec![0; n];
            let mut scores = Vec::with_capacity(folds.len());
            for (k, test) in folds.iter().enumerate() {
                let train = dataset.subset(&partition.train(k));
                check_training_classes(&train, k)?;
                let model = fit_multiclass_lda(&train, lambda)?;
                let test_x = dataset.features().select(Axis(0), test);
                let fold_scores = DiscriminantScores {
                    scores: model.project(test_x.view())?,
                    centroids: model.centroids.clone(),
                };
                for (&i, lab) in test.iter().zip(classify_nearest_centroid(&fold_scores)?) {
                    predicted[i] = lab;
                }
                scores.push(fold_scores);
            }
            CvResult {
                folds,
                outputs: CvOutputs::Multiclass { scores, predicted },
                performance: None,
            }
        }
    };
    match task {
        NaiveTask::Multiclass => {
            result.evaluate_multiclass(dataset.labels(), settings.averaging)?;
        }
        _ => {
            let y = labels_to_pm1(dataset.labels());
            result.evaluate_binary(y.as_slice().expect("contiguous"), settings)?;
        }
    }
    Ok(result)
}

/// Retraining permutation test: for every permutation in `plan`, permute the
/// labels and rerun [`naive_crossval`]; returns the fold-averaged metric per
/// permutation (entry 0 is the observed value).
pub fn naive_permutation_test(
    dataset: &Dataset,
    partition: &FoldPartition,
    plan: &PermutationPlan,
    task: NaiveTask,
    lambda: f64,
    settings: CvSettings,
) -> Result<Vec<f64>> {
    (0..plan.n_permutations())
        .map(|t| {
            let permuted = dataset.with_labels(plan.apply(t, dataset.labels())?)?;
            let cv = naive_crossval(&permuted, partition, task, lambda, settings)?;
            Ok(cv.mean_performance().expect("evaluated above"))
        })
        .collect()
}
