//! Property suite: analytical results against independent oracles on
//! grids of random problems. Each property reports its worst deviation and
//! the first cell that broke it.

use std::fmt;

use fastcv::lda::class_means;
use fastcv::synthgen::child_seed;
use fastcv::{
    adjust_bias, augment, centroid_distance_gaps, cv_decision_values, cv_multiclass, fit_binary_lda,
    fit_multiclass_lda, fit_optimal_scoring, fit_ridge, generalized_eigh, hat_matrix, make_folds, naive_crossval,
    naive_permutation_test, permutation_p_value, permutation_test_binary, permutation_test_multiclass,
    scatter_matrices, shrink_to_ridge, CvOutputs, CvSettings, Dataset, FoldAveraging, HatMatrix, Metric, NaiveTask,
    PermutationPlan, Regularization, RidgeSpec, SyntheticConfig,
};
use ndarray::{Array1, ArrayView1};
use ndarray_linalg::Inverse;

use crate::error::{CliError, CliResult};

/// Deliberate defects for checking that the suite notices them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Compare the regression decision values without the bias correction.
    SkipBiasAdjustment,
}

impl std::str::FromStr for Fault {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "skip-bias-adjustment" => Ok(Fault::SkipBiasAdjustment),
            other => Err(CliError::Argument(format!("unknown fault `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub seeds: usize,
    pub master_seed: u64,
    pub fault: Option<Fault>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seeds: 5,
            master_seed: crate::config::DEFAULT_SEED,
            fault: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub max_deviation: f64,
    pub tolerance: f64,
    pub cells: usize,
    /// First offending cell, if any.
    pub failure: Option<String>,
}

impl fmt::Display for PropertyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<36} max_dev={:.3e} tol={:.1e} cells={}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.max_deviation,
            self.tolerance,
            self.cells
        )?;
        if let Some(cell) = &self.failure {
            write!(f, " first_failure=[{cell}]")?;
        }
        Ok(())
    }
}

/// Tracks the worst deviation over cells.
struct Tracker {
    name: &'static str,
    tolerance: f64,
    max: f64,
    cells: usize,
    failure: Option<String>,
}

impl Tracker {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            tolerance,
            max: 0.0,
            cells: 0,
            failure: None,
        }
    }

    fn record(&mut self, deviation: f64, cell: impl FnOnce() -> String) {
        self.cells += 1;
        let bad = !(deviation <= self.tolerance);
        if bad || deviation > self.max {
            self.max = if deviation.is_nan() {
                f64::INFINITY
            } else {
                deviation.max(self.max)
            };
        }
        if bad && self.failure.is_none() {
            self.failure = Some(cell());
        }
    }

    fn error(&mut self, e: impl fmt::Display, cell: impl FnOnce() -> String) {
        self.cells += 1;
        self.max = f64::INFINITY;
        if self.failure.is_none() {
            self.failure = Some(format!("{}: {e}", cell()));
        }
    }

    fn finish(self) -> PropertyReport {
        PropertyReport {
            name: self.name,
            passed: self.failure.is_none() && self.cells > 0,
            max_deviation: self.max,
            tolerance: self.tolerance,
            cells: self.cells,
            failure: self.failure,
        }
    }
}

fn max_abs_diff(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn max_abs(a: ArrayView1<'_, f64>) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// `1 − cos` of the angle between two vectors, with the sign of the cosine:
/// values near 0 mean same direction, near 2 opposite direction.
fn one_minus_cos(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    1.0 - a.dot(&b) / (a.dot(&a).sqrt() * b.dot(&b).sqrt())
}

fn hat(ds: &Dataset, lambda: f64) -> fastcv::Result<HatMatrix> {
    hat_matrix(&augment(ds.features())?, &RidgeSpec::new(lambda)?)
}

const BINARY_N: [usize; 2] = [16, 60];
const BINARY_P: [usize; 4] = [2, 10, 40, 80];
const BINARY_LAMBDA: [f64; 3] = [0.01, 1.0, 10.0];
const CLASS_RATIOS: [f64; 3] = [1.0, 3.0, 7.0];

fn binary_folds(n: usize) -> [usize; 3] {
    [2, 5, n]
}

/// Analytical `ẏ` against per-fold ridge refits; deviation is
/// `max|ẏ − oracle| / max|oracle|` per cell.
pub fn binary_oracle_equivalence(opts: &VerifyOptions, tolerance: f64) -> PropertyReport {
    let mut t = Tracker::new("binary_oracle_equivalence", tolerance);
    for n in BINARY_N {
        for p in BINARY_P {
            for k in binary_folds(n) {
                for (li, lambda) in BINARY_LAMBDA.into_iter().enumerate() {
                    for s in 0..opts.seeds {
                        let seed = child_seed(
                            opts.master_seed,
                            &[1, n as u64, p as u64, k as u64, li as u64, s as u64],
                        );
                        let cell = || format!("N={n} P={p} K={k} lambda={lambda} seed={seed}");
                        let run = || -> fastcv::Result<f64> {
                            let ds = fastcv::make_synthetic(n, p, 2, seed)?;
                            let part = make_folds(n, k, seed, Some(ds.labels()))?;
                            let y = ds.labels_pm1()?;
                            let fast = cv_decision_values(&hat(&ds, lambda)?, y.view(), &part)?;
                            let naive = naive_crossval(
                                &ds,
                                &part,
                                NaiveTask::BinaryRegressionForm,
                                lambda,
                                CvSettings::default(),
                            )?;
                            let a = fast.decision_values().expect("binary");
                            let b = naive.decision_values().expect("binary");
                            Ok(max_abs_diff(a.view(), b.view()) / max_abs(b.view()))
                        };
                        match run() {
                            Ok(d) => t.record(d, cell),
                            Err(e) => t.error(e, cell),
                        }
                    }
                }
            }
        }
    }
    t.finish()
}

/// Bias-adjusted decision values against classical LDA refits with the
/// midpoint bias, over unbalanced class ratios. Deviation counts samples
/// with `|ẏ| > 1e-10` whose sign disagrees.
pub fn bias_adjustment_sign_agreement(opts: &VerifyOptions) -> PropertyReport {
    let mut t = Tracker::new("bias_adjustment_sign_agreement", 0.0);
    for n in BINARY_N {
        for p in BINARY_P {
            for k in binary_folds(n) {
                for (li, lambda) in BINARY_LAMBDA.into_iter().enumerate() {
                    for ratio in CLASS_RATIOS {
                        for s in 0..opts.seeds {
                            let seed = child_seed(
                                opts.master_seed,
                                &[2, n as u64, p as u64, k as u64, li as u64, ratio as u64, s as u64],
                            );
                            let cell = || format!("N={n} P={p} K={k} lambda={lambda} ratio={ratio}:1 seed={seed}");
                            let run = || -> fastcv::Result<f64> {
                                let ds = SyntheticConfig::new(n, p, 2)
                                    .class_weights(vec![ratio, 1.0])
                                    .generate(seed)?
                                    .dataset;
                                let part = make_folds(n, k, seed, Some(ds.labels()))?;
                                let y = ds.labels_pm1()?;
                                let h = hat(&ds, lambda)?;
                                let raw = cv_decision_values(&h, y.view(), &part)?;
                                let adjusted = match opts.fault {
                                    Some(Fault::SkipBiasAdjustment) => raw.decision_values().expect("binary").clone(),
                                    None => adjust_bias(&h, y.view(), &part, raw)?
                                        .adjusted_decision_values()
                                        .expect("adjusted")
                                        .clone(),
                                };
                                let naive =
                                    naive_crossval(&ds, &part, NaiveTask::BinaryLda, lambda, CvSettings::default())?;
                                let oracle = naive.decision_values().expect("binary");
                                let mismatches = adjusted
                                    .iter()
                                    .zip(oracle)
                                    .filter(|(a, b)| a.abs() > 1e-10 && (**a >= 0.0) != (**b >= 0.0))
                                    .count();
                                Ok(mismatches as f64)
                            };
                            match run() {
                                Ok(d) => t.record(d, cell),
                                Err(e) => t.error(e, cell),
                            }
                        }
                    }
                }
            }
        }
    }
    t.finish()
}

/// Outcome of the multi-class label comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelEquivalence {
    pub report: PropertyReport,
    pub compared: usize,
    pub excluded: usize,
}

/// Analytical optimal-scoring labels against classical LDA refits.
/// Samples whose two nearest centroids (in either model) lie within
/// `1e-9` of each other are excluded; exclusions must stay below 1%.
pub fn multiclass_label_equivalence(opts: &VerifyOptions) -> LabelEquivalence {
    let mut t = Tracker::new("multiclass_label_equivalence", 0.0);
    let (mut compared, mut excluded) = (0usize, 0usize);
    for n in [30usize, 90] {
        for p in [4usize, 20, 60] {
            for c in [3usize, 5] {
                for k in [3usize, 5] {
                    for lambda in [0.1f64, 1.0] {
                        for s in 0..opts.seeds {
                            let seed = child_seed(
                                opts.master_seed,
                                &[3, n as u64, p as u64, c as u64, k as u64, lambda.to_bits(), s as u64],
                            );
                            let cell = || format!("N={n} P={p} C={c} K={k} lambda={lambda} seed={seed}");
                            let run = || -> fastcv::Result<(usize, usize, usize)> {
                                let ds = fastcv::make_synthetic(n, p, c, seed)?;
                                let part = make_folds(n, k, seed, Some(ds.labels()))?;
                                let fast = cv_multiclass(
                                    &hat(&ds, lambda)?,
                                    ds.labels(),
                                    c,
                                    &part,
                                    FoldAveraging::Unweighted,
                                )?;
                                let naive =
                                    naive_crossval(&ds, &part, NaiveTask::Multiclass, lambda, CvSettings::default())?;
                                let mut ambiguous = vec![false; n];
                                for result in [&fast, &naive] {
                                    if let CvOutputs::Multiclass { scores, .. } = &result.outputs {
                                        for (fold, sc) in result.folds.iter().zip(scores) {
                                            for (&i, gap) in fold.iter().zip(centroid_distance_gaps(sc)?) {
                                                ambiguous[i] |= gap < 1e-9;
                                            }
                                        }
                                    }
                                }
                                let a = fast.predicted_labels().expect("multiclass");
                                let b = naive.predicted_labels().expect("multiclass");
                                let mismatches = (0..n).filter(|&i| !ambiguous[i] && a[i] != b[i]).count();
                                let skipped = ambiguous.iter().filter(|&&x| x).count();
                                Ok((mismatches, n - skipped, skipped))
                            };
                            match run() {
                                Ok((m, cmp, skip)) => {
                                    compared += cmp;
                                    excluded += skip;
                                    t.record(m as f64, cell);
                                }
                                Err(e) => t.error(e, cell),
                            }
                        }
                    }
                }
            }
        }
    }
    let mut report = t.finish();
    let total = compared + excluded;
    if total > 0 && excluded as f64 >= 0.01 * total as f64 {
        report.passed = false;
        report
            .failure
            .get_or_insert(format!("{excluded} of {total} samples excluded as ambiguous"));
    }
    LabelEquivalence {
        report,
        compared,
        excluded,
    }
}

/// `W = BΘD` from a full-data optimal-scoring fit against classical LDA
/// coordinates over `n_datasets` random problems; deviation is
/// `1 − |cos|` per column.
pub fn os_lda_identity(opts: &VerifyOptions, n_datasets: usize, tolerance: f64) -> PropertyReport {
    let mut t = Tracker::new("os_lda_identity", tolerance);
    let shapes = [(60, 5, 3), (80, 20, 4), (40, 3, 4), (100, 12, 5), (50, 80, 5)];
    for i in 0..n_datasets {
        let (n, p, c) = shapes[i % shapes.len()];
        let lambda = [0.1, 1.0][i % 2];
        let seed = child_seed(opts.master_seed, &[4, i as u64]);
        let cell = || format!("N={n} P={p} C={c} lambda={lambda} seed={seed}");
        let run = || -> fastcv::Result<f64> {
            let ds = fastcv::make_synthetic(n, p, c, seed)?;
            let os = fit_optimal_scoring(&ds, lambda)?;
            let lda = fit_multiclass_lda(&ds, lambda)?;
            let mut worst = 0.0f64;
            for (a, b) in os.w_mat.columns().into_iter().zip(lda.w_mat.columns()) {
                let cos = a.dot(&b) / (a.dot(&a).sqrt() * b.dot(&b).sqrt());
                worst = worst.max(1.0 - cos.abs());
            }
            if os.w_mat.ncols() != lda.w_mat.ncols() {
                worst = f64::INFINITY;
            }
            Ok(worst)
        };
        match run() {
            Ok(d) => t.record(d, cell),
            Err(e) => t.error(e, cell),
        }
    }
    t.finish()
}

/// Per-permutation metrics of the analytical permutation tests against the
/// retraining loop, for `n_null` null permutations plus the observed
/// labelling. Covers the regression form (accuracy and AUC), bias-adjusted
/// binary LDA and the multi-class path.
pub fn permutation_path_equality(opts: &VerifyOptions, n_null: usize, tolerance: f64) -> PropertyReport {
    let mut t = Tracker::new("permutation_path_equality", tolerance);
    let lambda = 1.0;
    for s in 0..opts.seeds {
        let seed = child_seed(opts.master_seed, &[5, s as u64]);
        let binary_cases = [
            (Metric::Accuracy, false, NaiveTask::BinaryRegressionForm),
            (Metric::Auc, false, NaiveTask::BinaryRegressionForm),
            (Metric::Accuracy, true, NaiveTask::BinaryLda),
        ];
        for (metric, adjust, naive_task) in binary_cases {
            let cell = || format!("binary metric={metric} adjust={adjust} seed={seed}");
            let run = || -> fastcv::Result<f64> {
                let ds = SyntheticConfig::new(100, 10, 2)
                    .class_weights(vec![3.0, 2.0])
                    .generate(seed)?
                    .dataset;
                let part = make_folds(100, 5, seed, Some(ds.labels()))?;
                let plan = PermutationPlan::new(100, n_null + 1, seed)?;
                let y = ds.labels_pm1()?;
                let settings = CvSettings::new(metric);
                let fast = permutation_test_binary(&hat(&ds, lambda)?, y.view(), &part, &plan, settings, adjust)?;
                let naive = naive_permutation_test(&ds, &part, &plan, naive_task, lambda, settings)?;
                Ok(max_abs_diff(Array1::from(fast).view(), Array1::from(naive).view()))
            };
            match run() {
                Ok(d) => t.record(d, cell),
                Err(e) => t.error(e, cell),
            }
        }
        let cell = || format!("multiclass C=4 seed={seed}");
        let run = || -> fastcv::Result<f64> {
            let ds = fastcv::make_synthetic(80, 10, 4, seed)?;
            let part = make_folds(80, 5, seed, Some(ds.labels()))?;
            let plan = PermutationPlan::new(80, n_null + 1, seed)?;
            let fast = permutation_test_multiclass(
                &hat(&ds, lambda)?,
                ds.labels(),
                4,
                &part,
                &plan,
                FoldAveraging::Unweighted,
            )?;
            let naive =
                naive_permutation_test(&ds, &part, &plan, NaiveTask::Multiclass, lambda, CvSettings::default())?;
            Ok(max_abs_diff(Array1::from(fast).view(), Array1::from(naive).view()))
        };
        match run() {
            Ok(d) => t.record(d, cell),
            Err(e) => t.error(e, cell),
        }
    }
    t.finish()
}

/// The hat matrix rebuilt from a label-permuted dataset is bit-identical.
pub fn hat_permutation_invariance(opts: &VerifyOptions) -> PropertyReport {
    let mut t = Tracker::new("hat_permutation_invariance", 0.0);
    for s in 0..opts.seeds {
        let seed = child_seed(opts.master_seed, &[6, s as u64]);
        let cell = || format!("seed={seed}");
        let run = || -> fastcv::Result<f64> {
            let ds = fastcv::make_synthetic(40, 8, 2, seed)?;
            let plan = PermutationPlan::new(40, 4, seed)?;
            let original = hat(&ds, 0.5)?;
            let mut worst = 0.0f64;
            for p in 1..plan.n_permutations() {
                let permuted = ds.with_labels(plan.apply(p, ds.labels())?)?;
                let again = hat(&permuted, 0.5)?;
                if again.h() != original.h() {
                    worst = worst.max(
                        (&again.h() - &original.h())
                            .iter()
                            .fold(0.0f64, |m, v| m.max(v.abs()))
                            .max(f64::MIN_POSITIVE),
                    );
                }
            }
            Ok(worst)
        };
        match run() {
            Ok(d) => t.record(d, cell),
            Err(e) => t.error(e, cell),
        }
    }
    t.finish()
}

/// Two-class `S_b w = μ S_w w` has a single non-zero eigenvalue
/// `N₁N₂/N · Δᵀ S_w⁻¹ Δ` with eigenvector `S_w⁻¹ Δ`. Deviation is the
/// largest of the eigenvalue's relative error, `1 − |cos|` of the
/// eigenvector, and the other eigenvalues relative to the first.
pub fn two_class_scatter_eigenpair(opts: &VerifyOptions, instances: usize, tolerance: f64) -> PropertyReport {
    let mut t = Tracker::new("two_class_scatter_eigenpair", tolerance);
    for i in 0..instances {
        let seed = child_seed(opts.master_seed, &[7, i as u64]);
        let (n, p) = (20 + 7 * (i % 9), 2 + i % 8);
        let cell = || format!("N={n} P={p} seed={seed}");
        let run = || -> fastcv::Result<f64> {
            let ds = fastcv::make_synthetic(n, p, 2, seed)?;
            let sp = scatter_matrices(&ds)?;
            let (means, _, counts) = class_means(&ds)?;
            let delta = &means.row(0) - &means.row(1);
            let dir = sp.s_w.inv().map_err(fastcv::Error::from)?.dot(&delta);
            let expected = (counts[0] * counts[1]) as f64 / n as f64 * delta.dot(&dir);
            let (vals, vecs) = generalized_eigh(sp.s_b.view(), sp.s_w.view())?;
            let rel = (vals[0] - expected).abs() / expected;
            let vec_dev = 1.0 - (1.0 - one_minus_cos(vecs.column(0), dir.view())).abs();
            let rest = vals.iter().skip(1).fold(0.0f64, |m, v| m.max(v.abs())) / vals[0];
            Ok(rel.max(vec_dev).max(rest))
        };
        match run() {
            Ok(d) => t.record(d, cell),
            Err(e) => t.error(e, cell),
        }
    }
    t.finish()
}

/// Least-squares regression on two class codes `z₁ > z₂` yields a weight
/// vector that is a positive multiple of `S_w⁻¹(m₁ − m₂)`, whatever the
/// codes. Deviation is `1 − cos` (so a negative factor fails).
pub fn regression_lda_collinearity(opts: &VerifyOptions, tolerance: f64) -> PropertyReport {
    let mut t = Tracker::new("regression_lda_collinearity", tolerance);
    let codes = [(1.0, -1.0), (1.0, 0.0), (2.0, -3.0), (7.5, 4.0)];
    for s in 0..opts.seeds.max(1) * 4 {
        let seed = child_seed(opts.master_seed, &[8, s as u64]);
        let ratio = CLASS_RATIOS[s % CLASS_RATIOS.len()];
        let cell = || format!("N=50 P=6 ratio={ratio}:1 seed={seed}");
        let run = || -> fastcv::Result<f64> {
            let ds = SyntheticConfig::new(50, 6, 2)
                .class_weights(vec![ratio, 1.0])
                .generate(seed)?
                .dataset;
            let lda = fit_binary_lda(&ds, 0.0, Regularization::Ridge)?;
            let design = augment(ds.features())?;
            let mut worst = 0.0f64;
            for (z1, z2) in codes {
                let y: Array1<f64> = ds.labels().iter().map(|&l| if l == 1 { z1 } else { z2 }).collect();
                let beta = fit_ridge(&design, y.view(), &RidgeSpec::new(0.0)?)?;
                worst = worst.max(one_minus_cos(beta.weights(0), lda.w.view()).abs());
            }
            Ok(worst)
        };
        match run() {
            Ok(d) => t.record(d, cell),
            Err(e) => t.error(e, cell),
        }
    }
    t.finish()
}

/// Ridge regression on ±1 codes with penalty `λ` points along
/// `(S_w + λI)⁻¹(m₁ − m₂)`, including `P > N`.
pub fn ridge_lda_correspondence(opts: &VerifyOptions, tolerance: f64) -> PropertyReport {
    let mut t = Tracker::new("ridge_lda_correspondence", tolerance);
    for (n, p) in [(40usize, 5usize), (30, 60)] {
        for lambda in BINARY_LAMBDA {
            for s in 0..opts.seeds {
                let seed = child_seed(opts.master_seed, &[9, n as u64, lambda.to_bits(), s as u64]);
                let cell = || format!("N={n} P={p} lambda={lambda} seed={seed}");
                let run = || -> fastcv::Result<f64> {
                    let ds = SyntheticConfig::new(n, p, 2)
                        .class_weights(vec![2.0, 1.0])
                        .generate(seed)?
                        .dataset;
                    let lda = fit_binary_lda(&ds, lambda, Regularization::Ridge)?;
                    let y = ds.labels_pm1()?;
                    let beta = fit_ridge(&augment(ds.features())?, y.view(), &RidgeSpec::new(lambda)?)?;
                    Ok(one_minus_cos(beta.weights(0), lda.w.view()).abs())
                };
                match run() {
                    Ok(d) => t.record(d, cell),
                    Err(e) => t.error(e, cell),
                }
            }
        }
    }
    t.finish()
}

/// Shrinkage LDA with `λs` and ridge LDA with `λs/(1 − λs) · ν` share a
/// direction.
pub fn shrinkage_ridge_direction(opts: &VerifyOptions, tolerance: f64) -> PropertyReport {
    let mut t = Tracker::new("shrinkage_ridge_direction", tolerance);
    for lambda_s in [0.01f64, 0.2, 0.5, 0.9] {
        for s in 0..opts.seeds {
            let seed = child_seed(opts.master_seed, &[10, lambda_s.to_bits(), s as u64]);
            let cell = || format!("N=30 P=40 shrinkage={lambda_s} seed={seed}");
            let run = || -> fastcv::Result<f64> {
                let ds = fastcv::make_synthetic(30, 40, 2, seed)?;
                let sw = scatter_matrices(&ds)?.s_w;
                let nu = fastcv::lsq::scatter_trace_scale(sw.view())?;
                let shrink = fit_binary_lda(&ds, lambda_s, Regularization::Shrinkage)?;
                let ridge = fit_binary_lda(&ds, shrink_to_ridge(lambda_s, nu)?, Regularization::Ridge)?;
                Ok(one_minus_cos(shrink.w.view(), ridge.w.view()).abs())
            };
            match run() {
                Ok(d) => t.record(d, cell),
                Err(e) => t.error(e, cell),
            }
        }
    }
    t.finish()
}

/// Mean permutation accuracy on pure-noise data; passes inside `band`.
pub fn noise_chance_level(opts: &VerifyOptions, n_null: usize, band: (f64, f64)) -> (PropertyReport, f64) {
    let mut t = Tracker::new("noise_chance_level", 0.0);
    let seed = child_seed(opts.master_seed, &[11]);
    let cell = || format!("N=200 P=20 K=10 T={n_null} seed={seed}");
    let run = || -> fastcv::Result<f64> {
        let ds = SyntheticConfig::new(200, 20, 2)
            .centroid_scale(0.0)
            .generate(seed)?
            .dataset;
        let part = make_folds(200, 10, seed, Some(ds.labels()))?;
        let plan = PermutationPlan::new(200, n_null + 1, seed)?;
        let y = ds.labels_pm1()?;
        let acc = permutation_test_binary(&hat(&ds, 1.0)?, y.view(), &part, &plan, CvSettings::default(), true)?;
        Ok(acc.iter().sum::<f64>() / acc.len() as f64)
    };
    let mean = match run() {
        Ok(mean) => {
            let outside = if mean < band.0 {
                band.0 - mean
            } else {
                (mean - band.1).max(0.0)
            };
            t.record(outside, || format!("{} mean={mean}", cell()));
            mean
        }
        Err(e) => {
            t.error(e, cell);
            f64::NAN
        }
    };
    (t.finish(), mean)
}

/// Well-separated classes reach the smallest attainable p-value
/// `1/(T + 1)`.
pub fn separable_p_value(opts: &VerifyOptions, n_null: usize) -> (PropertyReport, f64) {
    let mut t = Tracker::new("separable_p_value", 1e-15);
    let seed = child_seed(opts.master_seed, &[12]);
    let cell = || format!("N=200 P=20 K=10 T={n_null} seed={seed}");
    let run = || -> fastcv::Result<f64> {
        let ds = SyntheticConfig::new(200, 20, 2)
            .centroid_scale(20.0)
            .generate(seed)?
            .dataset;
        let part = make_folds(200, 10, seed, Some(ds.labels()))?;
        let plan = PermutationPlan::new(200, n_null + 1, seed)?;
        let y = ds.labels_pm1()?;
        let acc = permutation_test_binary(&hat(&ds, 1.0)?, y.view(), &part, &plan, CvSettings::default(), true)?;
        Ok(permutation_p_value(acc[0], &acc[1..]))
    };
    let p = match run() {
        Ok(p) => {
            t.record((p - 1.0 / (n_null + 1) as f64).abs(), || format!("{} p={p}", cell()));
            p
        }
        Err(e) => {
            t.error(e, cell);
            f64::NAN
        }
    };
    (t.finish(), p)
}

/// Names of every registered property, in report order.
pub const PROPERTIES: [&str; 12] = [
    "binary_oracle_equivalence",
    "bias_adjustment_sign_agreement",
    "multiclass_label_equivalence",
    "os_lda_identity",
    "permutation_path_equality",
    "hat_permutation_invariance",
    "two_class_scatter_eigenpair",
    "regression_lda_collinearity",
    "ridge_lda_correspondence",
    "shrinkage_ridge_direction",
    "noise_chance_level",
    "separable_p_value",
];

/// Runs the whole suite with the default tolerances.
pub fn run_all(opts: &VerifyOptions) -> Vec<PropertyReport> {
    vec![
        binary_oracle_equivalence(opts, 1e-8),
        bias_adjustment_sign_agreement(opts),
        multiclass_label_equivalence(opts).report,
        os_lda_identity(opts, 20, 1e-6),
        permutation_path_equality(opts, 50, 1e-8),
        hat_permutation_invariance(opts),
        two_class_scatter_eigenpair(opts, 100, 1e-8),
        regression_lda_collinearity(opts, 1e-8),
        ridge_lda_correspondence(opts, 1e-8),
        shrinkage_ridge_direction(opts, 1e-8),
        noise_chance_level(opts, 100, (0.45, 0.55)).0,
        separable_p_value(opts, 100).0,
    ]
}
