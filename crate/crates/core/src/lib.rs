//! Exact k-fold cross-validation for ridge regression and linear
//! discriminant analysis without retraining.
//!
//! A least-squares classifier fitted once on all samples determines the hat
//! matrix `H`. The decision values every fold's retrained model would
//! produce follow from `H` and the full-data residuals by a small linear
//! solve per fold. The same update gives binary LDA (after a bias
//! correction), multi-class LDA through optimal scoring, and permutation
//! tests where only the labels change.
//!
//! ```
//! use fastcv::{augment, cv_decision_values, hat_matrix, make_folds, make_synthetic, CvSettings, RidgeSpec};
//!
//! let data = make_synthetic(60, 5, 2, 7)?;
//! let hat = hat_matrix(&augment(data.features())?, &RidgeSpec::new(1.0)?)?;
//! let folds = make_folds(60, 5, 7, Some(data.labels()))?;
//! let y = data.labels_pm1()?;
//! let mut cv = cv_decision_values(&hat, y.view(), &folds)?;
//! let acc = cv.evaluate_binary(y.as_slice().unwrap(), CvSettings::default())?.mean;
//! assert!((0.0..=1.0).contains(&acc));
//! # Ok::<(), fastcv::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod binary;
pub mod cv;
pub mod dataset;
pub mod error;
pub mod lda;
pub mod lsq;
pub mod metrics;
pub mod multiclass;
pub mod synthgen;

pub use binary::{adjust_bias, cv_decision_values, permutation_test_binary, FoldFits};
pub use cv::{CvOutputs, CvResult, CvSettings};
pub use dataset::{labels_to_pm1, Dataset};
pub use error::{Error, Result};
pub use lda::{
    decision_values, fit_binary_lda, fit_multiclass_lda, generalized_eigh, naive_crossval, naive_permutation_test,
    predict_multiclass, scatter_matrices, BinaryLdaModel, MulticlassLdaModel, NaiveTask, Regularization, ScatterPair,
};
pub use lsq::{
    augment, fit_ridge, fit_ridge_multi, hat_matrix, shrink_to_ridge, woodbury_train_inverse, AugmentedDesign,
    HatMatrix, ModelWeights, RidgeSpec,
};
pub use metrics::{accuracy, auc, relative_efficiency, FoldAveraging, FoldPerformance, Metric};
pub use multiclass::{
    centroid_distance_gaps, classify_nearest_centroid, cv_multiclass, discriminant_scores, fit_optimal_scoring,
    indicator_matrix, os_step1_cv, os_step2, permutation_test_multiclass, DiscriminantScores, IndicatorMatrix,
    OptimalScoring, OptimalScoringFit,
};
pub use synthgen::{make_folds, make_synthetic, FoldPartition, PermutationPlan, SyntheticConfig};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/hat-matrix.md")]
    mod hat_matrix {}
    #[doc = include_str!("../../../book/src/binary-lda.md")]
    mod binary_lda {}
    #[doc = include_str!("../../../book/src/multiclass.md")]
    mod multiclass {}
    #[doc = include_str!("../../../book/src/permutation-tests.md")]
    mod permutation_tests {}
    #[doc = include_str!("../../../book/src/regularization.md")]
    mod regularization {}
    #[doc = include_str!("../../../book/src/failure-modes.md")]
    mod failure_modes {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

/// Empirical p-value of `observed` against a null distribution:
/// `(1 + #{null ≥ observed}) / (T + 1)`.
pub fn permutation_p_value(observed: f64, null: &[f64]) -> f64 {
    let exceed = null.iter().filter(|&&v| v >= observed).count();
    (1 + exceed) as f64 / (null.len() + 1) as f64
}
