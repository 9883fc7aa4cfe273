//! Acceptance gate. Every criterion runs at its stated tolerance and prints
//! one PASS/FAIL line; the process exits non-zero if any criterion fails.

use std::time::Instant;

use fastcv::relative_efficiency;
use fastcv_cli::bench::{pin_blas_threads, run_method, BenchCell, BenchOptions, Method};
use fastcv_cli::config::{LambdaPolicy, DEFAULT_SEED};
use fastcv_cli::verify::{
    bias_adjustment_sign_agreement, binary_oracle_equivalence, hat_permutation_invariance,
    multiclass_label_equivalence, noise_chance_level, os_lda_identity, permutation_path_equality,
    regression_lda_collinearity, ridge_lda_correspondence, separable_p_value, shrinkage_ridge_direction,
    two_class_scatter_eigenpair, PropertyReport, VerifyOptions,
};

struct Gate {
    results: Vec<(u32, bool)>,
}

impl Gate {
    fn report(&mut self, id: u32, title: &str, passed: bool, detail: String) {
        println!(
            "criterion {id} [{title}]: {} {detail}",
            if passed { "PASS" } else { "FAIL" }
        );
        self.results.push((id, passed));
    }
}

fn summary(reports: &[&PropertyReport]) -> (bool, String) {
    let passed = reports.iter().all(|r| r.passed);
    let parts: Vec<String> = reports
        .iter()
        .map(|r| {
            let mut s = format!("{} max_dev={:.3e} tol={:.0e}", r.name, r.max_deviation, r.tolerance);
            if let Some(f) = &r.failure {
                s.push_str(&format!(" first_failure=[{f}]"));
            }
            s
        })
        .collect();
    (passed, parts.join("; "))
}

fn timed_efficiency(n_features: usize, n_classes: usize) -> Result<(f64, f64, f64, f64), String> {
    let cell = BenchCell::new(DEFAULT_SEED, 100, n_features, n_classes, 10, 100, 0);
    let opts = BenchOptions {
        lambda: LambdaPolicy::Fixed(1.0),
        metric: fastcv::Metric::Accuracy,
        stratify: true,
    };
    let standard = run_method(&cell, Method::Standard, &opts).map_err(|e| e.to_string())?;
    let analytic = run_method(&cell, Method::Analytic, &opts).map_err(|e| e.to_string())?;
    if standard.input_digest != analytic.input_digest {
        return Err("methods consumed different inputs".into());
    }
    let re = relative_efficiency(standard.wall_time_seconds, analytic.wall_time_seconds).map_err(|e| e.to_string())?;
    let perf_gap = (standard.performance_mean - analytic.performance_mean).abs();
    Ok((re, standard.wall_time_seconds, analytic.wall_time_seconds, perf_gap))
}

fn main() {
    pin_blas_threads();
    let opts = VerifyOptions::default();
    let mut gate = Gate { results: Vec::new() };

    let start = Instant::now();
    let r = binary_oracle_equivalence(&opts, 1e-8);
    let secs = start.elapsed().as_secs_f64();
    let (ok, detail) = summary(&[&r]);
    gate.report(
        1,
        "binary oracle equivalence",
        ok && secs < 30.0,
        format!("{detail} runtime={secs:.1}s limit=30s"),
    );

    let r = bias_adjustment_sign_agreement(&opts);
    let (ok, detail) = summary(&[&r]);
    gate.report(
        2,
        "bias-adjusted sign agreement",
        ok,
        format!("{detail} cells={}", r.cells),
    );

    let r = multiclass_label_equivalence(&opts);
    let total = r.compared + r.excluded;
    let (ok, detail) = summary(&[&r.report]);
    gate.report(
        3,
        "multiclass label equivalence",
        ok,
        format!(
            "{detail} excluded={}/{} ({:.3}%, limit 1%)",
            r.excluded,
            total,
            100.0 * r.excluded as f64 / total.max(1) as f64
        ),
    );

    let r = os_lda_identity(&opts, 20, 1e-6);
    let (ok, detail) = summary(&[&r]);
    gate.report(
        4,
        "optimal scoring vs LDA coordinates",
        ok,
        format!("{detail} datasets={}", r.cells),
    );

    let a = permutation_path_equality(&opts, 50, 1e-8);
    let b = hat_permutation_invariance(&opts);
    let (ok, detail) = summary(&[&a, &b]);
    gate.report(5, "permutation path equality", ok, detail);

    let reports = [
        two_class_scatter_eigenpair(&opts, 100, 1e-8),
        regression_lda_collinearity(&opts, 1e-8),
        ridge_lda_correspondence(&opts, 1e-8),
        shrinkage_ridge_direction(&opts, 1e-8),
    ];
    let (ok, detail) = summary(&reports.iter().collect::<Vec<_>>());
    gate.report(6, "closed-form identities", ok, detail);

    let start = Instant::now();
    let mut lines = Vec::new();
    let mut ok = true;
    for (task, classes) in [("binary", 2usize), ("multiclass", 5)] {
        let high = timed_efficiency(1000, classes);
        let low = timed_efficiency(10, classes);
        match (high, low) {
            (Ok((re_hi, ts_hi, ta_hi, gap_hi)), Ok((re_lo, _, _, gap_lo))) => {
                let cell_ok = re_hi >= 1.0 && re_hi - re_lo >= 1.0 && gap_hi <= 1e-8 && gap_lo <= 1e-8;
                ok &= cell_ok;
                lines.push(format!(
                    "{task}: RE(P=1000)={re_hi:.2} (standard {ts_hi:.2}s, analytic {ta_hi:.3}s) RE(P=10)={re_lo:.2} gain={:.2}",
                    re_hi - re_lo
                ));
            }
            (hi, lo) => {
                ok = false;
                lines.push(format!("{task}: error {:?} {:?}", hi.err(), lo.err()));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 600.0;
    gate.report(
        7,
        "relative efficiency",
        ok,
        format!("{} floor=1.0 gain>=1.0 runtime={secs:.0}s limit=600s", lines.join("; ")),
    );

    let (noise, mean) = noise_chance_level(&opts, 100, (0.45, 0.55));
    let (sep, p) = separable_p_value(&opts, 100);
    gate.report(
        8,
        "statistical sanity",
        noise.passed && sep.passed,
        format!(
            "noise mean accuracy={mean:.4} band=[0.45, 0.55]; separable p={p:.6} expected={:.6}",
            1.0 / 101.0
        ),
    );

    let failed: Vec<u32> = gate.results.iter().filter(|(_, ok)| !ok).map(|(id, _)| *id).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", gate.results.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
