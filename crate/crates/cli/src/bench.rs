//! Timing grid: the retraining loop against the analytical path on
//! identical data, folds and permutations.

use std::hash::{DefaultHasher, Hash, Hasher};
use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use fastcv::synthgen::child_seed;
use fastcv::{
    augment, hat_matrix, make_folds, make_synthetic, naive_permutation_test, permutation_test_binary,
    permutation_test_multiclass, relative_efficiency, CvSettings, Dataset, FoldAveraging, FoldPartition, Metric,
    NaiveTask, PermutationPlan, RidgeSpec,
};
use serde::Serialize;

use crate::config::{Config, LambdaPolicy, Task};
use crate::error::CliResult;

pub const CSV_HEADER: &str =
    "method,task,n_samples,n_features,n_classes,n_folds,n_permutations,repeat,seed,wall_time_seconds,performance_mean";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Standard,
    Analytic,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Standard => "standard",
            Method::Analytic => "analytic",
        }
    }
}

/// One point of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BenchCell {
    pub task: Task,
    pub n_samples: usize,
    pub n_features: usize,
    pub n_classes: usize,
    pub n_folds: usize,
    pub n_permutations: usize,
    pub repeat: usize,
    pub seed: u64,
}

impl BenchCell {
    pub fn new(
        master_seed: u64,
        n_samples: usize,
        n_features: usize,
        n_classes: usize,
        n_folds: usize,
        n_permutations: usize,
        repeat: usize,
    ) -> Self {
        let coords = [n_samples, n_features, n_classes, n_folds, n_permutations, repeat].map(|v| v as u64);
        Self {
            task: if n_classes == 2 { Task::Binary } else { Task::Multiclass },
            n_samples,
            n_features,
            n_classes,
            n_folds,
            n_permutations,
            repeat,
            seed: child_seed(master_seed, &coords),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRecord {
    pub method: Method,
    #[serde(flatten)]
    pub cell: BenchCell,
    pub wall_time_seconds: f64,
    pub performance_mean: f64,
    /// Hash of the data, folds and permutations the method consumed.
    pub input_digest: String,
}

impl BenchRecord {
    pub fn csv_row(&self) -> String {
        let c = &self.cell;
        format!(
            "{},{},{},{},{},{},{},{},{},{:.9},{}",
            self.method.as_str(),
            c.task,
            c.n_samples,
            c.n_features,
            c.n_classes,
            c.n_folds,
            c.n_permutations,
            c.repeat,
            c.seed,
            self.wall_time_seconds,
            self.performance_mean
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellFailure {
    pub cell: BenchCell,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Efficiency {
    #[serde(flatten)]
    pub cell: BenchCell,
    pub relative_efficiency: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BenchReport {
    pub records: Vec<BenchRecord>,
    pub errors: Vec<CellFailure>,
    pub efficiency: Vec<Efficiency>,
}

impl BenchReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.records {
            writeln!(w, "{}", r.csv_row())?;
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, w: W) -> std::io::Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }
}

/// Per-method settings that stay fixed across the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchOptions {
    pub lambda: LambdaPolicy,
    pub metric: Metric,
    pub stratify: bool,
}

impl BenchOptions {
    pub fn from_config(config: &Config) -> Self {
        Self {
            lambda: config.lambda,
            metric: config.metric,
            stratify: config.stratify,
        }
    }
}

/// Every cell of the configured grid, ordered by coordinates.
pub fn grid_cells(config: &Config) -> CliResult<Vec<BenchCell>> {
    let g = &config.bench;
    g.validate()?;
    let mut cells = Vec::new();
    for &n in &g.n_samples {
        for &p in &g.n_features {
            for &c in &g.n_classes {
                for k in &g.n_folds {
                    for &t in &g.n_permutations {
                        for r in 0..g.repeats {
                            cells.push(BenchCell::new(config.seed, n, p, c, k.resolve(n), t, r));
                        }
                    }
                }
            }
        }
    }
    Ok(cells)
}

struct Inputs {
    dataset: Dataset,
    lambda: f64,
    partition: FoldPartition,
    plan: PermutationPlan,
}

impl Inputs {
    fn generate(cell: &BenchCell, opts: &BenchOptions) -> CliResult<Self> {
        let dataset = make_synthetic(cell.n_samples, cell.n_features, cell.n_classes, cell.seed)?;
        let lambda = opts.lambda.resolve(&dataset)?;
        let strat = opts.stratify.then(|| dataset.labels());
        let partition = make_folds(cell.n_samples, cell.n_folds, cell.seed, strat)?;
        let plan = PermutationPlan::new(cell.n_samples, cell.n_permutations, cell.seed)?;
        Ok(Self {
            dataset,
            lambda,
            partition,
            plan,
        })
    }

    fn digest(&self) -> String {
        let mut h = DefaultHasher::new();
        for v in self.dataset.features() {
            v.to_bits().hash(&mut h);
        }
        self.dataset.labels().hash(&mut h);
        self.lambda.to_bits().hash(&mut h);
        self.partition.folds().hash(&mut h);
        for t in 0..self.plan.n_permutations() {
            self.plan.permutation(t).hash(&mut h);
        }
        format!("{:016x}", h.finish())
    }
}

/// Runs one method on one cell. Data, folds and permutations are rebuilt
/// from the cell seed outside the timed region.
pub fn run_method(cell: &BenchCell, method: Method, opts: &BenchOptions) -> CliResult<BenchRecord> {
    let inputs = Inputs::generate(cell, opts)?;
    let ds = &inputs.dataset;
    let settings = CvSettings::new(match cell.task {
        Task::Binary => opts.metric,
        Task::Multiclass => Metric::Accuracy,
    });
    let start = Instant::now();
    let values = match (method, cell.task) {
        (Method::Standard, task) => {
            let naive = match task {
                Task::Binary => NaiveTask::BinaryLda,
                Task::Multiclass => NaiveTask::Multiclass,
            };
            naive_permutation_test(ds, &inputs.partition, &inputs.plan, naive, inputs.lambda, settings)?
        }
        (Method::Analytic, task) => {
            let hat = hat_matrix(&augment(ds.features())?, &RidgeSpec::new(inputs.lambda)?)?;
            match task {
                Task::Binary => {
                    let y = ds.labels_pm1()?;
                    permutation_test_binary(&hat, y.view(), &inputs.partition, &inputs.plan, settings, true)?
                }
                Task::Multiclass => permutation_test_multiclass(
                    &hat,
                    ds.labels(),
                    ds.n_classes(),
                    &inputs.partition,
                    &inputs.plan,
                    FoldAveraging::Unweighted,
                )?,
            }
        }
    };
    let wall = start.elapsed().as_secs_f64().max(f64::MIN_POSITIVE);
    Ok(BenchRecord {
        method,
        cell: *cell,
        wall_time_seconds: wall,
        performance_mean: values.iter().sum::<f64>() / values.len() as f64,
        input_digest: inputs.digest(),
    })
}

type CellOutcome = CliResult<(BenchRecord, BenchRecord)>;

fn run_cell(cell: &BenchCell, opts: &BenchOptions) -> CellOutcome {
    let standard = run_method(cell, Method::Standard, opts)?;
    let analytic = run_method(cell, Method::Analytic, opts)?;
    debug_assert_eq!(standard.input_digest, analytic.input_digest);
    Ok((standard, analytic))
}

/// Runs `cells` on up to `threads` workers. Output order follows `cells`
/// regardless of completion order.
pub fn run_cells(cells: &[BenchCell], opts: &BenchOptions, threads: usize) -> BenchReport {
    let slots: Vec<Mutex<Option<CellOutcome>>> = cells.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let worker = || loop {
        let i = next.fetch_add(1, Ordering::Relaxed);
        let Some(cell) = cells.get(i) else { break };
        log::info!(
            "cell {}/{}: {} N={} P={} C={} K={} T={} repeat {}",
            i + 1,
            cells.len(),
            cell.task,
            cell.n_samples,
            cell.n_features,
            cell.n_classes,
            cell.n_folds,
            cell.n_permutations,
            cell.repeat
        );
        *slots[i].lock().expect("slot lock") = Some(run_cell(cell, opts));
    };
    let threads = threads.clamp(1, cells.len().max(1));
    if threads == 1 {
        worker();
    } else {
        std::thread::scope(|s| {
            for _ in 0..threads {
                s.spawn(worker);
            }
        });
    }

    let mut report = BenchReport::default();
    for (cell, slot) in cells.iter().zip(slots) {
        match slot.into_inner().expect("slot lock").expect("every cell ran") {
            Ok((standard, analytic)) => {
                if let Ok(re) = relative_efficiency(standard.wall_time_seconds, analytic.wall_time_seconds) {
                    report.efficiency.push(Efficiency {
                        cell: *cell,
                        relative_efficiency: re,
                    });
                }
                report.records.push(standard);
                report.records.push(analytic);
            }
            Err(e) => {
                log::error!(
                    "cell N={} P={} C={} K={} skipped: {e}",
                    cell.n_samples,
                    cell.n_features,
                    cell.n_classes,
                    cell.n_folds
                );
                report.errors.push(CellFailure {
                    cell: *cell,
                    message: e.to_string(),
                });
            }
        }
    }
    report
}

pub fn run_bench(config: &Config) -> CliResult<BenchReport> {
    let cells = grid_cells(config)?;
    Ok(run_cells(&cells, &BenchOptions::from_config(config), config.threads))
}

extern "C" {
    fn openblas_set_num_threads(n: std::os::raw::c_int);
}

/// Keeps BLAS calls single-threaded so timed regions measure one core.
pub fn pin_blas_threads() {
    // SAFETY: plain setter in the linked OpenBLAS; takes effect for later calls.
    unsafe { openblas_set_num_threads(1) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::FoldCount;

    fn small_config() -> Config {
        let mut c = Config::default();
        c.bench.n_samples = vec![20, 30];
        c.bench.n_features = vec![2, 5, 8];
        c.bench.n_classes = vec![2];
        c.bench.n_folds = vec![FoldCount::Fixed(4)];
        c.bench.n_permutations = vec![3];
        c.bench.repeats = 2;
        c
    }

    #[test]
    fn grid_product_count() {
        let report = run_bench(&small_config()).unwrap();
        assert_eq!(report.records.len(), 24);
        assert!(report.errors.is_empty());
        assert_eq!(report.efficiency.len(), 12);
        let mut csv = Vec::new();
        report.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(text.lines().count(), 25);
    }

    #[test]
    fn both_methods_agree_on_inputs_and_performance() {
        let mut c = small_config();
        c.bench.n_classes = vec![2, 3];
        for pair in run_bench(&c).unwrap().records.chunks(2) {
            assert_eq!(pair[0].method, Method::Standard);
            assert_eq!(pair[1].method, Method::Analytic);
            assert_eq!(pair[0].input_digest, pair[1].input_digest);
            assert!((pair[0].performance_mean - pair[1].performance_mean).abs() <= 1e-8);
            assert!(pair[0].wall_time_seconds > 0.0);
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let c = small_config();
        let cells = grid_cells(&c).unwrap();
        let opts = BenchOptions::from_config(&c);
        let one = run_cells(&cells, &opts, 1);
        let three = run_cells(&cells, &opts, 3);
        let strip = |r: &BenchReport| -> Vec<(BenchCell, f64, String)> {
            r.records
                .iter()
                .map(|x| (x.cell, x.performance_mean, x.input_digest.clone()))
                .collect()
        };
        assert_eq!(strip(&one), strip(&three));
    }

    #[test]
    fn failing_cells_are_reported_and_skipped() {
        let mut c = small_config();
        // 25 folds cannot be drawn from 20 samples
        c.bench.n_samples = vec![20, 30];
        c.bench.n_features = vec![2];
        c.bench.n_folds = vec![FoldCount::Fixed(25)];
        c.bench.repeats = 1;
        let report = run_bench(&c).unwrap();
        assert_eq!(report.errors.len(), 1);
        assert_eq!(report.errors[0].cell.n_samples, 20);
        assert_eq!(report.records.len(), 2);
    }
}
