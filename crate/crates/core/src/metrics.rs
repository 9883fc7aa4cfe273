//! Classifier performance metrics and the benchmark's relative efficiency.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Metric {
    #[default]
    Accuracy,
    Auc,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Accuracy => "accuracy",
            Metric::Auc => "auc",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accuracy" => Ok(Metric::Accuracy),
            "auc" => Ok(Metric::Auc),
            other => Err(invalid(format!("unknown metric `{other}`"))),
        }
    }
}

/// A metric value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerformanceValue {
    pub metric: Metric,
    pub value: f64,
}

/// How per-fold values are combined into one number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FoldAveraging {
    /// Plain mean over folds.
    #[default]
    Unweighted,
    /// Mean weighted by test-fold size.
    BySize,
}

/// Per-fold metric values and their average.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldPerformance {
    pub metric: Metric,
    pub per_fold: Vec<f64>,
    pub mean: f64,
}

impl FoldPerformance {
    pub fn new(metric: Metric, per_fold: Vec<f64>, fold_sizes: &[usize], averaging: FoldAveraging) -> Self {
        let mean = match averaging {
            FoldAveraging::Unweighted => per_fold.iter().sum::<f64>() / per_fold.len() as f64,
            FoldAveraging::BySize => {
                let total: usize = fold_sizes.iter().sum();
                per_fold.iter().zip(fold_sizes).map(|(v, &n)| v * n as f64).sum::<f64>() / total as f64
            }
        };
        Self { metric, per_fold, mean }
    }
}

/// Fraction of decision values whose sign matches the ±1 label; values `>= 0`
/// count as class `+1`.
pub fn accuracy(decision_values: &[f64], labels_pm1: &[f64]) -> Result<PerformanceValue> {
    if decision_values.len() != labels_pm1.len() {
        return Err(invalid(format!(
            "{} decision values for {} labels",
            decision_values.len(),
            labels_pm1.len()
        )));
    }
    if decision_values.is_empty() {
        return Err(Error::UndefinedMetric("accuracy of an empty set".into()));
    }
    let hits = decision_values
        .iter()
        .zip(labels_pm1)
        .filter(|(&d, &y)| (d >= 0.0) == (y > 0.0))
        .count();
    Ok(PerformanceValue {
        metric: Metric::Accuracy,
        value: hits as f64 / decision_values.len() as f64,
    })
}

/// Fraction of predicted class labels equal to the true ones.
pub fn label_accuracy(predicted: &[usize], truth: &[usize]) -> Result<PerformanceValue> {
    if predicted.len() != truth.len() {
        return Err(invalid(format!(
            "{} predictions for {} labels",
            predicted.len(),
            truth.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::UndefinedMetric("accuracy of an empty set".into()));
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(PerformanceValue {
        metric: Metric::Accuracy,
        value: hits as f64 / predicted.len() as f64,
    })
}

/// Area under the ROC curve as the Mann–Whitney statistic, with average
/// ranks for ties (a tied positive/negative pair counts one half).
pub fn auc(decision_values: &[f64], labels_pm1: &[f64]) -> Result<PerformanceValue> {
    if decision_values.len() != labels_pm1.len() {
        return Err(invalid(format!(
            "{} decision values for {} labels",
            decision_values.len(),
            labels_pm1.len()
        )));
    }
    let n_pos = labels_pm1.iter().filter(|&&y| y > 0.0).count();
    let n_neg = labels_pm1.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric("AUC needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..decision_values.len()).collect();
    order.sort_by(|&a, &b| decision_values[a].total_cmp(&decision_values[b]));

    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && decision_values[order[j + 1]] == decision_values[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their average
        let avg_rank = (i + j + 2) as f64 / 2.0;
        for &k in &order[i..=j] {
            if labels_pm1[k] > 0.0 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(PerformanceValue {
        metric: Metric::Auc,
        value: u / (n_pos * n_neg) as f64,
    })
}

/// Dispatches on `metric` for binary decision values.
pub fn binary_metric(metric: Metric, decision_values: &[f64], labels_pm1: &[f64]) -> Result<f64> {
    match metric {
        Metric::Accuracy => accuracy(decision_values, labels_pm1),
        Metric::Auc => auc(decision_values, labels_pm1),
    }
    .map(|p| p.value)
}

/// `log10(time_standard / time_analytic)`: 1.0 means ten times faster.
pub fn relative_efficiency(time_standard: f64, time_analytic: f64) -> Result<f64> {
    if !(time_standard > 0.0) || !(time_analytic > 0.0) {
        return Err(invalid(format!(
            "timings must be positive, got {time_standard} and {time_analytic}"
        )));
    }
    Ok((time_standard / time_analytic).log10())
}
