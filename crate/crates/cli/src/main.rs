use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fastcv::Metric;
use fastcv_cli::bench::{pin_blas_threads, run_bench};
use fastcv_cli::config::{Config, FoldCount, LambdaPolicy, OutputFormat, Task};
use fastcv_cli::run::{load_dataset, run_dataset, RunOptions};
use fastcv_cli::verify::{run_all, Fault, VerifyOptions};
use fastcv_cli::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "fastcv",
    version,
    about = "Analytical cross-validation for LDA and ridge regression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the analytical routines against retraining oracles.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Break one step on purpose to confirm the suite notices.
        #[arg(long, value_name = "FAULT", hide = true)]
        inject_fault: Option<Fault>,
    },
    /// Time the retraining loop against the analytical path over a grid.
    Bench {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelFlags,
    },
    /// Cross-validate a CSV dataset (label first, then features).
    Run {
        /// Input CSV file.
        data: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelFlags,
    },
}

#[derive(Args)]
struct Common {
    /// JSON configuration file; flags override its values.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Write results here instead of standard output.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "csv|json")]
    format: Option<OutputFormat>,
    #[arg(long, env = "FASTCV_SEED")]
    seed: Option<u64>,
    /// Worker threads for independent benchmark cells.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ModelFlags {
    #[arg(long, value_name = "binary|multiclass")]
    task: Option<Task>,
    /// Fold count, or `N` for leave-one-out (bench only).
    #[arg(long, value_name = "K")]
    folds: Option<FoldCount>,
    /// Ridge penalty, or `auto` for 1e-3 times the mean within-class variance.
    #[arg(long, value_name = "FLOAT|auto")]
    lambda: Option<LambdaPolicy>,
    /// Null permutations for `run`; labellings per cell (observed included) for `bench`.
    #[arg(long, value_name = "T")]
    permutations: Option<usize>,
    #[arg(long, value_name = "accuracy|auc")]
    metric: Option<Metric>,
    /// Keep class proportions equal across folds (the default).
    #[arg(long, overrides_with = "no_stratify")]
    stratify: bool,
    /// Draw folds without regard to class labels.
    #[arg(long, overrides_with = "stratify")]
    no_stratify: bool,
}

const HINT_STRATIFY: &str = "rerun with --stratify to keep every class in every training fold";
const HINT_FOLDS: &str = "a class has fewer samples than there are folds; lower --folds";

fn load_config(common: &Common) -> CliResult<Config> {
    let mut config = match &common.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(threads) = common.threads {
        config.threads = threads.max(1);
    }
    if let Some(format) = common.format {
        config.format = format;
    }
    if let Some(out) = &common.out {
        config.out = Some(out.clone());
    }
    Ok(config)
}

fn apply_model_flags(config: &mut Config, flags: &ModelFlags) {
    if let Some(l) = flags.lambda {
        config.lambda = l;
    }
    if let Some(m) = flags.metric {
        config.metric = m;
    }
    if flags.stratify {
        config.stratify = true;
    }
    if flags.no_stratify {
        config.stratify = false;
    }
}

fn fold_hint(config: &Config) -> &'static str {
    if config.stratify {
        HINT_FOLDS
    } else {
        HINT_STRATIFY
    }
}

fn with_output(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> CliResult<()> {
    let shown = path.map_or("<stdout>".to_string(), |p| p.display().to_string());
    let result = match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| CliError::io(shown.clone(), e))?;
            let mut w = BufWriter::new(file);
            body(&mut w).and_then(|_| w.flush())
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            body(&mut w).and_then(|_| w.flush())
        }
    };
    result.map_err(|e| CliError::io(shown, e))
}

fn verify(common: Common, fault: Option<Fault>) -> CliResult<()> {
    let config = load_config(&common)?;
    let opts = VerifyOptions {
        seeds: config.verify.seeds,
        master_seed: config.seed,
        fault,
    };
    let reports = run_all(&opts);
    with_output(config.out.as_deref(), |w| {
        for r in &reports {
            writeln!(w, "{r}")?;
        }
        Ok(())
    })?;
    let failed = reports.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(CliError::VerifyFailed {
            failed,
            total: reports.len(),
        });
    }
    Ok(())
}

fn bench(common: Common, flags: ModelFlags, hint: &mut &'static str) -> CliResult<()> {
    let mut config = load_config(&common)?;
    apply_model_flags(&mut config, &flags);
    *hint = fold_hint(&config);
    if let Some(task) = flags.task {
        let classes: Vec<usize> = config
            .bench
            .n_classes
            .iter()
            .copied()
            .filter(|&c| (c == 2) == (task == Task::Binary))
            .collect();
        config.bench.n_classes = if classes.is_empty() {
            vec![if task == Task::Binary { 2 } else { 5 }]
        } else {
            classes
        };
    }
    if let Some(k) = flags.folds {
        config.bench.n_folds = vec![k];
    }
    if let Some(t) = flags.permutations {
        config.bench.n_permutations = vec![t];
    }
    let report = run_bench(&config)?;
    for failure in &report.errors {
        eprintln!("skipped cell {:?}: {}", failure.cell, failure.message);
    }
    with_output(config.out.as_deref(), |w| match config.format {
        OutputFormat::Csv => report.write_csv(w),
        OutputFormat::Json => report.write_json(&mut *w).and_then(|_| writeln!(w)),
    })
}

fn run(data: PathBuf, common: Common, flags: ModelFlags, hint: &mut &'static str) -> CliResult<()> {
    let mut config = load_config(&common)?;
    apply_model_flags(&mut config, &flags);
    *hint = fold_hint(&config);
    let folds = match flags.folds {
        Some(FoldCount::Fixed(k)) => k,
        Some(FoldCount::LeaveOneOut) => return Err(CliError::Argument("`run` needs an explicit fold count".into())),
        None => config.run.folds,
    };
    let opts = RunOptions {
        task: flags.task.unwrap_or(config.run.task),
        folds,
        lambda: config.lambda,
        permutations: flags.permutations.unwrap_or(config.run.permutations),
        metric: config.metric,
        stratify: config.stratify,
        seed: config.seed,
    };
    let dataset = load_dataset(&data)?;
    let output = run_dataset(&dataset, &opts)?;
    with_output(config.out.as_deref(), |w| {
        serde_json::to_writer_pretty(&mut *w, &output)?;
        writeln!(w)
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    pin_blas_threads();
    let cli = Cli::parse();
    let mut hint = HINT_STRATIFY;
    let result = match cli.command {
        Command::Verify { common, inject_fault } => verify(common, inject_fault),
        Command::Bench { common, model } => bench(common, model, &mut hint),
        Command::Run { data, common, model } => run(data, common, model, &mut hint),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Core(fastcv::Error::DegenerateFold { .. }) = e {
                eprintln!("hint: {hint}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
