//! One-shot analytical cross-validation of a CSV dataset, with an optional
//! permutation test.

use std::fs::File;
use std::path::Path;

use fastcv::{
    adjust_bias, augment, cv_decision_values, cv_multiclass, hat_matrix, make_folds, permutation_p_value,
    permutation_test_binary, permutation_test_multiclass, CvSettings, Dataset, FoldAveraging, Metric, PermutationPlan,
    RidgeSpec,
};
use serde::Serialize;

use crate::config::{LambdaPolicy, Task};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub task: Task,
    pub folds: usize,
    pub lambda: LambdaPolicy,
    /// Null permutations; `0` skips the test.
    pub permutations: usize,
    pub metric: Metric,
    pub stratify: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutput {
    pub task: Task,
    pub n_samples: usize,
    pub n_features: usize,
    pub n_classes: usize,
    pub n_folds: usize,
    pub lambda: f64,
    pub metric: String,
    pub stratified: bool,
    pub seed: u64,
    pub per_fold: Vec<f64>,
    pub mean: f64,
    pub permutations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub null_distribution: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
}

pub fn load_dataset(path: &Path) -> CliResult<Dataset> {
    let file = File::open(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    Ok(Dataset::from_csv_reader(file)?)
}

pub fn run_dataset(dataset: &Dataset, opts: &RunOptions) -> CliResult<RunOutput> {
    let n = dataset.n_samples();
    match opts.task {
        Task::Binary if dataset.n_classes() != 2 => {
            return Err(CliError::Argument(format!(
                "binary task needs labels 1 and 2, data has {} classes",
                dataset.n_classes()
            )))
        }
        Task::Multiclass if opts.metric != Metric::Accuracy => {
            return Err(CliError::Argument("multiclass runs are scored by accuracy only".into()))
        }
        _ => {}
    }
    let lambda = opts.lambda.resolve(dataset)?;
    let hat = hat_matrix(&augment(dataset.features())?, &RidgeSpec::new(lambda)?)?;
    let partition = make_folds(n, opts.folds, opts.seed, opts.stratify.then(|| dataset.labels()))?;

    let cv = match opts.task {
        Task::Binary => {
            let y = dataset.labels_pm1()?;
            let raw = cv_decision_values(&hat, y.view(), &partition)?;
            let mut adjusted = adjust_bias(&hat, y.view(), &partition, raw)?;
            adjusted.evaluate_binary(y.as_slice().expect("owned array"), CvSettings::new(opts.metric))?;
            adjusted
        }
        Task::Multiclass => cv_multiclass(
            &hat,
            dataset.labels(),
            dataset.n_classes(),
            &partition,
            FoldAveraging::Unweighted,
        )?,
    };
    let perf = cv.performance.clone().expect("evaluated");

    let (null_distribution, p_value) = if opts.permutations > 0 {
        let plan = PermutationPlan::new(n, opts.permutations + 1, opts.seed)?;
        let values = match opts.task {
            Task::Binary => {
                let y = dataset.labels_pm1()?;
                permutation_test_binary(&hat, y.view(), &partition, &plan, CvSettings::new(opts.metric), true)?
            }
            Task::Multiclass => permutation_test_multiclass(
                &hat,
                dataset.labels(),
                dataset.n_classes(),
                &partition,
                &plan,
                FoldAveraging::Unweighted,
            )?,
        };
        let null = values[1..].to_vec();
        let p = permutation_p_value(values[0], &null);
        (Some(null), Some(p))
    } else {
        (None, None)
    };

    Ok(RunOutput {
        task: opts.task,
        n_samples: n,
        n_features: dataset.n_features(),
        n_classes: dataset.n_classes(),
        n_folds: opts.folds,
        lambda,
        metric: perf.metric.to_string(),
        stratified: opts.stratify,
        seed: opts.seed,
        per_fold: perf.per_fold,
        mean: perf.mean,
        permutations: opts.permutations,
        null_distribution,
        p_value,
    })
}
