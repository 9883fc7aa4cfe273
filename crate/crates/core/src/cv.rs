//! Result types shared by the analytical and the retraining paths.

use ndarray::Array1;

use crate::dataset::check_pm1;
use crate::error::{invalid, Result};
use crate::metrics::{binary_metric, label_accuracy, FoldAveraging, FoldPerformance, Metric};
use crate::multiclass::DiscriminantScores;

/// Metric and fold-averaging choice for a cross-validation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CvSettings {
    pub metric: Metric,
    pub averaging: FoldAveraging,
}

impl CvSettings {
    pub fn new(metric: Metric) -> Self {
        Self {
            metric,
            averaging: FoldAveraging::Unweighted,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CvOutputs {
    /// Cross-validated decision values, one per sample, assembled over folds.
    Binary {
        decision_values: Array1<f64>,
        /// Values after replacing the regression bias with the
        /// centroid-midpoint bias, when requested.
        adjusted: Option<Array1<f64>>,
    },
    /// Per-fold discriminant scores and the predicted class of every sample.
    Multiclass {
        scores: Vec<DiscriminantScores>,
        predicted: Vec<usize>,
    },
}

/// Outcome of one k-fold cross-validation.
#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    /// Test indices of each fold.
    pub folds: Vec<Vec<usize>>,
    pub outputs: CvOutputs,
    pub performance: Option<FoldPerformance>,
}

impl CvResult {
    pub fn decision_values(&self) -> Option<&Array1<f64>> {
        match &self.outputs {
            CvOutputs::Binary { decision_values, .. } => Some(decision_values),
            CvOutputs::Multiclass { .. } => None,
        }
    }

    pub fn adjusted_decision_values(&self) -> Option<&Array1<f64>> {
        match &self.outputs {
            CvOutputs::Binary { adjusted, .. } => adjusted.as_ref(),
            CvOutputs::Multiclass { .. } => None,
        }
    }

    /// Adjusted values if present, raw values otherwise.
    pub fn effective_decision_values(&self) -> Option<&Array1<f64>> {
        self.adjusted_decision_values().or(self.decision_values())
    }

    pub fn predicted_labels(&self) -> Option<&[usize]> {
        match &self.outputs {
            CvOutputs::Multiclass { predicted, .. } => Some(predicted),
            CvOutputs::Binary { .. } => None,
        }
    }

    pub fn mean_performance(&self) -> Option<f64> {
        self.performance.as_ref().map(|p| p.mean)
    }

    fn fold_sizes(&self) -> Vec<usize> {
        self.folds.iter().map(Vec::len).collect()
    }

    /// Scores the binary outputs fold by fold against ±1 labels.
    pub fn evaluate_binary(&mut self, labels_pm1: &[f64], settings: CvSettings) -> Result<&FoldPerformance> {
        check_pm1(labels_pm1)?;
        let dv = self
            .effective_decision_values()
            .ok_or_else(|| invalid("binary metric requested for a multi-class result"))?;
        let mut per_fold = Vec::with_capacity(self.folds.len());
        for fold in &self.folds {
            let d: Vec<f64> = fold.iter().map(|&i| dv[i]).collect();
            let y: Vec<f64> = fold.iter().map(|&i| labels_pm1[i]).collect();
            per_fold.push(binary_metric(settings.metric, &d, &y)?);
        }
        let perf = FoldPerformance::new(settings.metric, per_fold, &self.fold_sizes(), settings.averaging);
        Ok(self.performance.insert(perf))
    }

    /// Per-fold accuracy of the multi-class predictions.
    pub fn evaluate_multiclass(&mut self, labels: &[usize], averaging: FoldAveraging) -> Result<&FoldPerformance> {
        let predicted = self
            .predicted_labels()
            .ok_or_else(|| invalid("label accuracy requested for a binary result"))?;
        let mut per_fold = Vec::with_capacity(self.folds.len());
        for fold in &self.folds {
            let p: Vec<usize> = fold.iter().map(|&i| predicted[i]).collect();
            let t: Vec<usize> = fold.iter().map(|&i| labels[i]).collect();
            per_fold.push(label_accuracy(&p, &t)?.value);
        }
        let perf = FoldPerformance::new(Metric::Accuracy, per_fold, &self.fold_sizes(), averaging);
        Ok(self.performance.insert(perf))
    }
}
