//! Analytical cross-validation for multi-class LDA through optimal scoring.
//!
//! Step 1 regresses the class indicator matrix `Y` on the augmented design;
//! its cross-validated fits `Ẏ` come from the same fold update as the binary
//! case, applied column by column. Step 2 is a `C × C` eigenproblem on the
//! training fits that yields the optimal class scores `Θ` and the scaling `D`
//! turning regression coefficients into discriminant coordinates
//! `W = BΘD`.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use ndarray_linalg::{Eigh, UPLO};

use crate::binary::{FoldFits, FoldSolver};
use crate::cv::{CvOutputs, CvResult};
use crate::dataset::Dataset;
use crate::error::{invalid, Error, Result};
use crate::lda::normalize_signs;
use crate::lsq::{augment, fit_ridge_multi, HatMatrix, RidgeSpec};
use crate::metrics::FoldAveraging;
use crate::synthgen::{FoldPartition, PermutationPlan};

/// Tolerance for eigenvalues just outside `[0, 1]`.
pub const ALPHA_CLAMP_TOL: f64 = 1e-8;
/// Score vectors with a smaller coefficient of variation count as constant.
pub const TRIVIAL_SCORE_CV: f64 = 1e-8;

/// One-hot `N × C` class indicator matrix; column `j` is class `j + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorMatrix {
    y: Array2<f64>,
}

impl IndicatorMatrix {
    pub fn matrix(&self) -> ArrayView2<'_, f64> {
        self.y.view()
    }

    pub fn n_classes(&self) -> usize {
        self.y.ncols()
    }

    /// Copy with rows reordered as `out[i] = self[perm[i]]`.
    pub fn permuted(&self, plan: &PermutationPlan, t: usize) -> Result<Self> {
        if plan.permutation(t).len() != self.y.nrows() {
            return Err(invalid("permutation length differs from the sample count"));
        }
        Ok(Self {
            y: plan.apply_rows(t, &self.y),
        })
    }
}

/// Builds the indicator matrix of 1-based labels.
pub fn indicator_matrix(labels: &[usize], n_classes: usize) -> Result<IndicatorMatrix> {
    let mut y = Array2::zeros((labels.len(), n_classes));
    for (i, &l) in labels.iter().enumerate() {
        if l == 0 || l > n_classes {
            return Err(invalid(format!("label {l} outside 1..={n_classes}")));
        }
        y[[i, l - 1]] = 1.0;
    }
    Ok(IndicatorMatrix { y })
}

/// Cross-validated fits of the indicator regression, one entry per fold.
pub fn os_step1_cv(hat: &HatMatrix, y_mat: &IndicatorMatrix, partition: &FoldPartition) -> Result<Vec<FoldFits>> {
    FoldSolver::new(hat, partition)?.fits(hat, y_mat.matrix())
}

/// Optimal scores from the training fits of one fold.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalScoring {
    /// `C × r` score vectors, `θᵀ D_π θ = 1` with `D_π` the class proportions.
    pub theta: Array2<f64>,
    /// Descending, all strictly inside `(0, 1)`.
    pub alpha_sq: Array1<f64>,
    /// `r × r` diagonal.
    pub d_scale: Array2<f64>,
}

impl OptimalScoring {
    pub fn n_components(&self) -> usize {
        self.alpha_sq.len()
    }

    /// `ΘD`, mapping indicator fits to discriminant coordinates.
    pub fn projection(&self) -> Array2<f64> {
        self.theta.dot(&self.d_scale)
    }

    /// Eigenvalues of the equivalent LDA problem, `α²/(1 − α²)`.
    pub fn lda_eigenvalues(&self) -> Array1<f64> {
        self.alpha_sq.mapv(|a| a / (1.0 - a))
    }
}

/// Step 2 on one training fold.
///
/// The `C × C` matrix `M = Y_Trᵀ Ẏ_Tr / N_Tr` is symmetric, and its score
/// vectors are normalized against `D_π = Y_Trᵀ Y_Tr / N_Tr`, so the problem
/// `M θ = α² D_π θ` is solved as a symmetric one after scaling by
/// `D_π^{-1/2}`. The constant score vector (eigenvalue 1, present because
/// the intercept is unpenalized) is removed.
pub fn os_step2(y_dot_tr: ArrayView2<'_, f64>, y_tr: ArrayView2<'_, f64>) -> Result<OptimalScoring> {
    let (n_tr, c) = y_tr.dim();
    if y_dot_tr.dim() != (n_tr, c) {
        return Err(invalid(format!(
            "fits are {:?}, indicator rows are {:?}",
            y_dot_tr.dim(),
            y_tr.dim()
        )));
    }
    if c < 2 {
        return Err(invalid("optimal scoring needs at least 2 classes"));
    }
    if n_tr <= c {
        return Err(invalid(format!("{n_tr} training samples for {c} classes")));
    }
    let counts = y_tr.sum_axis(Axis(0));
    if let Some(j) = counts.iter().position(|&n| n == 0.0) {
        return Err(Error::DegenerateClass { class: j + 1 });
    }
    let nf = n_tr as f64;
    let m = y_tr.t().dot(&y_dot_tr) / nf;
    assert_eq!(m.dim(), (c, c));
    let pi = counts / nf;
    let inv_sqrt = pi.mapv(|p| 1.0 / p.sqrt());
    let mut k = (&m + &m.t()) * 0.5;
    for i in 0..c {
        for j in 0..c {
            k[[i, j]] *= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    let (vals, vecs) = k.eigh(UPLO::Lower)?;
    let mut theta_all = vecs;
    for (mut row, &s) in theta_all.rows_mut().into_iter().zip(&inv_sqrt) {
        row *= s;
    }

    let trivial = trivial_component(&theta_all, &vals, &pi);
    let mut kept: Vec<(f64, usize)> = Vec::with_capacity(c - 1);
    for (idx, &a) in vals.iter().enumerate() {
        if idx == trivial {
            continue;
        }
        let clamped = if (-ALPHA_CLAMP_TOL..0.0).contains(&a) {
            0.0
        } else if a > 1.0 && a <= 1.0 + ALPHA_CLAMP_TOL {
            1.0
        } else if (0.0..=1.0).contains(&a) {
            a
        } else {
            return Err(Error::NumericalDegeneracy(format!(
                "optimal-scoring eigenvalue {a:.3e} outside [0, 1]"
            )));
        };
        if clamped == 0.0 || clamped == 1.0 {
            log::warn!("dropping optimal-scoring component with eigenvalue {clamped}");
            continue;
        }
        kept.push((clamped, idx));
    }
    kept.sort_by(|a, b| b.0.total_cmp(&a.0));
    if kept.is_empty() {
        return Err(Error::NumericalDegeneracy(
            "no non-degenerate optimal-scoring component".into(),
        ));
    }
    let cols: Vec<usize> = kept.iter().map(|&(_, i)| i).collect();
    let mut theta = theta_all.select(Axis(1), &cols);
    normalize_signs(&mut theta);
    let alpha_sq: Array1<f64> = kept.iter().map(|&(a, _)| a).collect();
    let d_scale = Array2::from_diag(&alpha_sq.mapv(|a| 1.0 / (nf.sqrt() * (a * (1.0 - a)).sqrt())));
    Ok(OptimalScoring {
        theta,
        alpha_sq,
        d_scale,
    })
}

/// Index of the constant score vector: smallest coefficient of variation of
/// the per-sample scores, or the eigenvalue nearest 1 if none is constant.
fn trivial_component(theta: &Array2<f64>, vals: &Array1<f64>, pi: &Array1<f64>) -> usize {
    let cv = |col: ndarray::ArrayView1<'_, f64>| {
        let mean = col.dot(pi);
        let var = col.iter().zip(pi).map(|(t, p)| p * (t - mean).powi(2)).sum::<f64>();
        var.sqrt() / mean.abs()
    };
    let (best, best_cv) = theta
        .columns()
        .into_iter()
        .map(cv)
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least two columns");
    if best_cv < TRIVIAL_SCORE_CV {
        return best;
    }
    vals.iter()
        .enumerate()
        .min_by(|a, b| (a.1 - 1.0).abs().total_cmp(&(b.1 - 1.0).abs()))
        .map(|(i, _)| i)
        .expect("non-empty spectrum")
}

/// Discriminant scores of some samples and the class centroids they are
/// compared against, in the same coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminantScores {
    /// `M × r`.
    pub scores: Array2<f64>,
    /// `C × r`, row `j` for class `j + 1`.
    pub centroids: Array2<f64>,
}

/// Scores `Ẏ Θ D` and the training centroids (class means of `Ẏ_Tr Θ D`).
pub fn discriminant_scores(
    y_dot: ArrayView2<'_, f64>,
    scoring: &OptimalScoring,
    y_dot_tr: ArrayView2<'_, f64>,
    labels_tr: &[usize],
) -> Result<DiscriminantScores> {
    let c = scoring.theta.nrows();
    if y_dot.ncols() != c || y_dot_tr.ncols() != c {
        return Err(invalid(format!("fits must have {c} columns")));
    }
    if y_dot_tr.nrows() != labels_tr.len() {
        return Err(invalid("training fits and labels differ in length"));
    }
    let proj = scoring.projection();
    let tr = y_dot_tr.dot(&proj);
    let mut centroids = Array2::<f64>::zeros((c, proj.ncols()));
    let mut counts = vec![0usize; c];
    for (row, &l) in tr.rows().into_iter().zip(labels_tr) {
        if l == 0 || l > c {
            return Err(invalid(format!("label {l} outside 1..={c}")));
        }
        let mut m = centroids.row_mut(l - 1);
        m += &row;
        counts[l - 1] += 1;
    }
    for (j, (mut m, &n)) in centroids.rows_mut().into_iter().zip(&counts).enumerate() {
        if n == 0 {
            return Err(Error::DegenerateClass { class: j + 1 });
        }
        m /= n as f64;
    }
    Ok(DiscriminantScores {
        scores: y_dot.dot(&proj),
        centroids,
    })
}

fn squared_distances(scores: &DiscriminantScores) -> Result<Array2<f64>> {
    let (m, r) = scores.scores.dim();
    if scores.centroids.ncols() != r {
        return Err(invalid(format!(
            "scores have {r} columns, centroids {}",
            scores.centroids.ncols()
        )));
    }
    if scores.centroids.nrows() == 0 {
        return Err(invalid("no centroids"));
    }
    let mut d = Array2::zeros((m, scores.centroids.nrows()));
    for (i, s) in scores.scores.rows().into_iter().enumerate() {
        for (j, c) in scores.centroids.rows().into_iter().enumerate() {
            d[[i, j]] = s.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum();
        }
    }
    Ok(d)
}

/// Label of the nearest centroid for every score row; ties go to the
/// smaller class index.
pub fn classify_nearest_centroid(scores: &DiscriminantScores) -> Result<Vec<usize>> {
    let d = squared_distances(scores)?;
    Ok(d.rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v < row[best] {
                    best = j;
                }
            }
            best + 1
        })
        .collect())
}

/// Difference between the second-smallest and smallest Euclidean centroid
/// distance of every score row; small gaps mark numerically ambiguous samples.
pub fn centroid_distance_gaps(scores: &DiscriminantScores) -> Result<Vec<f64>> {
    let d = squared_distances(scores)?;
    Ok(d.rows()
        .into_iter()
        .map(|row| {
            let mut dist: Vec<f64> = row.iter().map(|v| v.sqrt()).collect();
            dist.sort_by(f64::total_cmp);
            dist.get(1).map_or(f64::INFINITY, |second| second - dist[0])
        })
        .collect())
}

/// Analytical multi-class cross-validation, scored by per-fold accuracy.
pub fn cv_multiclass(
    hat: &HatMatrix,
    labels: &[usize],
    n_classes: usize,
    partition: &FoldPartition,
    averaging: FoldAveraging,
) -> Result<CvResult> {
    let solver = FoldSolver::new(hat, partition)?;
    let y = indicator_matrix(labels, n_classes)?;
    cv_multiclass_with(&solver, hat, &y, labels, averaging)
}

fn cv_multiclass_with(
    solver: &FoldSolver,
    hat: &HatMatrix,
    y: &IndicatorMatrix,
    labels: &[usize],
    averaging: FoldAveraging,
) -> Result<CvResult> {
    let fits = solver.fits(hat, y.matrix())?;
    let mut predicted = vec![0; labels.len()];
    let mut all_scores = Vec::with_capacity(fits.len());
    for (k, f) in fits.iter().enumerate() {
        let train = solver.train(k);
        let y_tr = y.matrix().select(Axis(0), train);
        let labels_tr: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
        let fold_err = |e: Error| match e {
            Error::DegenerateClass { class } => Error::DegenerateFold { fold: k, class },
            other => other,
        };
        let scoring = os_step2(f.train.view(), y_tr.view()).map_err(fold_err)?;
        let scores = discriminant_scores(f.test.view(), &scoring, f.train.view(), &labels_tr).map_err(fold_err)?;
        for (&i, l) in solver.test(k).iter().zip(classify_nearest_centroid(&scores)?) {
            predicted[i] = l;
        }
        all_scores.push(scores);
    }
    let mut result = CvResult {
        folds: solver.fold_lists(),
        outputs: CvOutputs::Multiclass {
            scores: all_scores,
            predicted,
        },
        performance: None,
    };
    result.evaluate_multiclass(labels, averaging)?;
    Ok(result)
}

/// Fold-averaged accuracy for every permutation in `plan`; `H` and the
/// per-fold factorizations are shared. Entry 0 is the observed accuracy.
pub fn permutation_test_multiclass(
    hat: &HatMatrix,
    labels: &[usize],
    n_classes: usize,
    partition: &FoldPartition,
    plan: &PermutationPlan,
    averaging: FoldAveraging,
) -> Result<Vec<f64>> {
    let solver = FoldSolver::new(hat, partition)?;
    let y = indicator_matrix(labels, n_classes)?;
    (0..plan.n_permutations())
        .map(|t| {
            let yp = y.permuted(plan, t)?;
            let lp = plan.apply(t, labels)?;
            let cv = cv_multiclass_with(&solver, hat, &yp, &lp, averaging)?;
            Ok(cv.mean_performance().expect("evaluated"))
        })
        .collect()
}

/// Optimal-scoring LDA fitted on a whole dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalScoringFit {
    /// `P × r` discriminant coordinates `W = BΘD` (feature rows of `B`).
    pub w_mat: Array2<f64>,
    /// Intercept row of `BΘD`.
    pub offset: Array1<f64>,
    pub scoring: OptimalScoring,
    /// `C × r` class means in discriminant coordinates.
    pub centroids: Array2<f64>,
}

impl OptimalScoringFit {
    pub fn predict(&self, features: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        if features.ncols() != self.w_mat.nrows() {
            return Err(invalid(format!(
                "model expects {} features, got {}",
                self.w_mat.nrows(),
                features.ncols()
            )));
        }
        let scores = features.dot(&self.w_mat) + &self.offset;
        classify_nearest_centroid(&DiscriminantScores {
            scores,
            centroids: self.centroids.clone(),
        })
    }
}

/// Indicator regression plus step 2 on the full data, without folds.
pub fn fit_optimal_scoring(dataset: &Dataset, lambda: f64) -> Result<OptimalScoringFit> {
    let design = augment(dataset.features())?;
    let y = indicator_matrix(dataset.labels(), dataset.n_classes())?;
    let b = fit_ridge_multi(&design, y.matrix(), &RidgeSpec::new(lambda)?)?;
    let fits = b.predict(&design);
    let scoring = os_step2(fits.view(), y.matrix())?;
    let proj = b.beta.dot(&scoring.projection());
    let p = dataset.n_features();
    let scores = discriminant_scores(fits.view(), &scoring, fits.view(), dataset.labels())?;
    Ok(OptimalScoringFit {
        w_mat: proj.slice(ndarray::s![..p, ..]).to_owned(),
        offset: proj.row(p).to_owned(),
        scoring,
        centroids: scores.centroids,
    })
}
