//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use bariance::bench::{
    run_benchmark, scaling_report_with_span, totals, BenchConfig, BenchmarkRecord,
};
use bariance::estimators::{
    bariance_naive, bariance_optimized, biased_variance, mean, unbiased_variance,
};
use bariance::inference::{ols_fit, t_tail, DesignMatrix, KdeCurve};
use bariance::montecarlo::{
    equivalence_study, mse_sweep, replicate_estimates, run_study, verify_bariance_identities,
    BootstrapConfig, EquivalenceConfig, StudyConfig, SweepConfig,
};
use bariance::randgen::sample;
use bariance::theory::{
    optimal_denominator_closed_form, optimal_denominator_numeric, theoretical_mse,
};
use bariance::{DistributionSpec, EstimatorKind, RngState, Sample64};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || {
        format!("took {elapsed:?}, limit {limit:?}")
    })
}

fn cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_bariance"))
        .args(args)
        .env_remove("BARIANCE_OUTPUT_DIR")
        .output()
        .map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&o.stderr)));
    }
    Ok(o.stdout)
}

fn worked_example() -> Outcome {
    let start = Instant::now();
    let x = Sample64::new(vec![1.0, 3.0, 5.0, 7.0, 9.0]).map_err(|e| e.to_string())?;
    let got = [
        mean(&x),
        biased_variance(&x),
        unbiased_variance(&x),
        bariance_naive(&x),
        bariance_optimized(&x),
    ]
    .map(|r| r.unwrap_or(f64::NAN));
    let elapsed = start.elapsed();
    ensure(got == [5.0, 8.0, 10.0, 20.0, 20.0], || {
        format!("library gave {got:?}")
    })?;
    within(elapsed, Duration::from_millis(1))?;

    let out = String::from_utf8(cli(&[
        "estimate", "1", "3", "5", "7", "9", "--format", "csv",
    ])?)
    .map_err(|e| e.to_string())?;
    let cli_values: Vec<f64> = out
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| {
            l.split(',')
                .nth(1)
                .and_then(|v| v.parse().ok())
                .unwrap_or(f64::NAN)
        })
        .collect();
    ensure(cli_values == [5.0, 8.0, 10.0, 20.0, 20.0], || {
        format!("cli gave {cli_values:?}")
    })?;
    Ok(format!("5/8/10/20/20 exactly, library time {elapsed:?}"))
}

fn identity_suite() -> Outcome {
    const SAMPLES: u64 = 100_000;
    let start = Instant::now();
    let mut params = RngState::new(42);
    let mut worst_identity = 0.0f64;
    let mut worst_equiv = 0.0f64;
    for i in 0..SAMPLES {
        let n = 2 + params.index(999);
        let dist = if i % 2 == 0 {
            DistributionSpec::normal(20.0 * params.uniform() - 10.0, 0.1 + 9.9 * params.uniform())
        } else {
            DistributionSpec::gamma(0.5 + 4.5 * params.uniform(), 0.5 + 4.5 * params.uniform())
        }
        .map_err(|e| e.to_string())?;
        let mut rng = RngState::child(42, i);
        let x = sample(&dist, n, &mut rng).map_err(|e| e.to_string())?;
        let naive = bariance_naive(&x).map_err(|e| e.to_string())?;
        let s2 = unbiased_variance(&x).map_err(|e| e.to_string())?;
        let opt = bariance_optimized(&x).map_err(|e| e.to_string())?;
        let rel = (naive - 2.0 * s2).abs() / naive.abs();
        ensure(rel <= 1e-12, || {
            format!("sample {i} (n={n}): naive/2S² relative gap {rel:e}")
        })?;
        let gap = (naive - opt).abs();
        ensure(gap <= 1e-9 + 1e-9 * naive.abs(), || {
            format!("sample {i} (n={n}): naive {naive} vs optimized {opt}")
        })?;
        worst_identity = worst_identity.max(rel);
        worst_equiv = worst_equiv.max(gap / (1e-9 + 1e-9 * naive.abs()));
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(60))?;
    Ok(format!(
        "{SAMPLES} samples, worst relative identity gap {worst_identity:.2e}, worst equivalence gap {worst_equiv:.2e} of tolerance, {elapsed:.1?}"
    ))
}

fn equivalence_reproduction() -> Outcome {
    let start = Instant::now();
    let config = EquivalenceConfig {
        dist: DistributionSpec::gamma(1.5, 4.0).map_err(|e| e.to_string())?,
        n_list: vec![50, 100, 150, 200, 250],
        tau: 1000,
        seed: 42,
        rtol: 1e-9,
        atol: 1e-9,
        resamples: 200,
    };
    let table = equivalence_study(&config).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let mut detail = Vec::new();
    for r in &table.rows {
        let z = (r.mean_naive - 48.0) / r.se_naive;
        ensure(z.abs() <= 3.0, || {
            format!("n={}: mean {} is {z:.2} SE from 48", r.n, r.mean_naive)
        })?;
        ensure(r.max_abs_diff < 1e-9, || {
            format!("n={}: max diff {:e}", r.n, r.max_abs_diff)
        })?;
        detail.push(format!("n={} {:.2}", r.n, r.mean_naive));
    }
    within(elapsed, Duration::from_secs(120))?;
    Ok(format!("{}, {elapsed:.1?}", detail.join(", ")))
}

fn identity_verification() -> Outcome {
    let mut detail = Vec::new();
    for (dist, n) in [
        (DistributionSpec::normal(0.0, 1.0), 10),
        (DistributionSpec::gamma(2.0, 2.0), 100),
        (DistributionSpec::gamma(0.7, 3.0), 37),
    ] {
        let config = StudyConfig {
            dist: dist.map_err(|e| e.to_string())?,
            n,
            tau: 10_000,
            seed: 42,
            estimators: EstimatorKind::STANDARD.to_vec(),
            bootstrap: None,
        };
        let report = run_study(&config).map_err(|e| e.to_string())?;
        let check = verify_bariance_identities(&report).map_err(|e| e.to_string())?;
        ensure(check.holds(1e-9), || format!("{}: {check:?}", config.dist))?;
        if config.dist == DistributionSpec::gamma(2.0, 2.0).unwrap() {
            let s2 = report
                .summary(EstimatorKind::UnbiasedVariance)
                .ok_or("missing unbiased summary")?;
            let se = s2.metrics.standard_error(config.tau);
            let z = (s2.metrics.point_mean - 8.0) / se;
            ensure(z.abs() <= 3.0, || {
                format!("S² mean {} is {z:.2} SE from 8", s2.metrics.point_mean)
            })?;
            detail.push(format!(
                "Gamma(2,2) S² mean {:.5} ({z:+.2} SE)",
                s2.metrics.point_mean
            ));
        }
        detail.push(format!(
            "{}: var gap {:.1e}, mse gap {:.1e}",
            config.dist, check.variance_deviation, check.mse_deviation
        ));
    }
    Ok(detail.join("; "))
}

fn sweep_reproduction() -> Outcome {
    let start = Instant::now();
    let config = SweepConfig {
        n: 5,
        sigma2: 10.0,
        a_grid: SweepConfig::default_grid(),
        tau: 10_000,
        seed: 42,
        bootstrap: BootstrapConfig::default(),
    };
    let table = mse_sweep(&config).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let mut worst = 0.0f64;
    for r in &table.rows {
        let z = (r.empirical.bias_sq - r.theoretical.bias_sq) / r.intervals.bias_sq.se;
        ensure(z.abs() <= 4.0, || {
            format!(
                "a={}: bias² {} vs {} ({z:.2} SE)",
                r.a, r.empirical.bias_sq, r.theoretical.bias_sq
            )
        })?;
        worst = worst.max(z.abs());
    }
    let best = table.argmin_mse().ok_or("empty sweep")?.a;
    ensure([5.5, 6.0, 6.5].contains(&best), || {
        format!("MSE argmin at a={best}")
    })?;
    within(elapsed, Duration::from_secs(120))?;
    Ok(format!(
        "worst bias² deviation {worst:.2} SE, MSE argmin a={best}, {elapsed:.1?}"
    ))
}

fn optimal_denominator() -> Outcome {
    let mut worst = 0.0f64;
    for n in 2..=1000usize {
        for s2 in [0.1, 1.0, 10.0] {
            let a = optimal_denominator_numeric(n, s2).map_err(|e| e.to_string())?;
            let err = (a - optimal_denominator_closed_form(n)).abs();
            ensure(err < 1e-6, || format!("n={n} σ²={s2}: a*={a}"))?;
            worst = worst.max(err);
            let by_n = theoretical_mse(n, n as f64, s2)
                .map_err(|e| e.to_string())?
                .mse;
            let bessel = theoretical_mse(n, (n - 1) as f64, s2)
                .map_err(|e| e.to_string())?
                .mse;
            ensure(by_n < bessel, || {
                format!("n={n} σ²={s2}: {by_n} >= {bessel}")
            })?;
        }
    }
    Ok(format!(
        "worst |a* − (n+1)| = {worst:.2e}; MSE(n) < MSE(n−1) throughout"
    ))
}

fn bench_records() -> Result<Vec<BenchmarkRecord>, String> {
    let config = BenchConfig {
        dist: DistributionSpec::gamma(2.0, 2.0).map_err(|e| e.to_string())?,
        n_list: vec![100, 200, 300, 400, 500],
        trials: 20,
        sims_per_trial: 500,
        seed: 42,
        warmup: BenchConfig::DEFAULT_WARMUP,
        estimators: EstimatorKind::STANDARD.to_vec(),
    };
    run_benchmark(&config).map_err(|e| e.to_string())
}

fn runtime_properties(records: &[BenchmarkRecord], elapsed: Duration) -> Outcome {
    let t = totals(records);
    let naive = EstimatorKind::BarianceNaive.canonical_rank();
    let opt = EstimatorKind::BarianceOptimized.canonical_rank();
    let ratio = |n: usize| t[&(naive, n)] as f64 / t[&(opt, n)] as f64;
    for n in [100, 200, 300, 400, 500] {
        ensure(t[&(opt, n)] < t[&(naive, n)], || {
            format!("n={n}: optimized not faster")
        })?;
    }
    ensure(ratio(500) > ratio(100), || {
        format!(
            "ratio at 500 ({:.1}) not above ratio at 100 ({:.1})",
            ratio(500),
            ratio(100)
        )
    })?;
    // the protocol's grid spans 5x, below the library's default 8x guard
    let slopes = scaling_report_with_span(records, 5.0).map_err(|e| e.to_string())?;
    let slope = |k: EstimatorKind| {
        slopes
            .iter()
            .find(|s| s.estimator == k)
            .map(|s| s.slope)
            .unwrap_or(f64::NAN)
    };
    let (sn, so) = (
        slope(EstimatorKind::BarianceNaive),
        slope(EstimatorKind::BarianceOptimized),
    );
    ensure((1.7..=2.3).contains(&sn), || format!("naive slope {sn:.3}"))?;
    ensure((0.5..=1.3).contains(&so), || {
        format!("optimized slope {so:.3}")
    })?;
    within(elapsed, Duration::from_secs(300))?;
    Ok(format!(
        "ratio {:.1} -> {:.1}, slopes naive {sn:.3} optimized {so:.3}, {elapsed:.1?}",
        ratio(100),
        ratio(500)
    ))
}

fn inference_plumbing(records: &[BenchmarkRecord]) -> Outcome {
    // planted coefficients on a noiseless design
    let beta = [3.25, -1.5, 0.75, 2.0];
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for i in 0..40 {
        let x1 = (i as f64 * 0.37).sin() * 5.0;
        let x2 = (i % 7) as f64;
        let x3 = ((i * i) % 11) as f64 - 5.0;
        let row = vec![1.0, x1, x2, x3];
        y.push(row.iter().zip(&beta).map(|(a, b)| a * b).sum());
        rows.push(row);
    }
    let design = DesignMatrix::new(
        vec!["intercept".into(), "x1".into(), "x2".into(), "x3".into()],
        rows,
        y,
    )
    .map_err(|e| e.to_string())?;
    let fit = ols_fit(&design).map_err(|e| e.to_string())?;
    for (got, want) in fit.coefficients.iter().zip(&beta) {
        ensure((got - want).abs() < 1e-8, || {
            format!("coefficient {got} vs {want}")
        })?;
    }
    ensure((fit.r_squared - 1.0).abs() < 1e-12, || {
        format!("R² = {}", fit.r_squared)
    })?;

    let fit = ols_fit(&DesignMatrix::fixed_effects(records).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let estimator_terms: Vec<(String, f64)> = fit
        .terms
        .iter()
        .zip(&fit.coefficients)
        .filter(|(t, _)| t.starts_with("estimator:"))
        .map(|(t, &c)| (t.clone(), c))
        .collect();
    let opt = fit
        .coefficient("estimator:bariance-opt")
        .ok_or("no bariance-opt term")?;
    // the omitted reference level counts as a coefficient of zero
    let most_negative = estimator_terms.iter().all(|(_, c)| opt <= *c) && opt < 0.0;
    ensure(most_negative, || {
        format!("estimator coefficients {estimator_terms:?}")
    })?;

    let p = t_tail(1.96, 1e6);
    ensure((p - 0.05).abs() < 1e-4, || {
        format!("t_tail(1.96, 1e6) = {p}")
    })?;

    let config = StudyConfig {
        dist: DistributionSpec::gamma(2.0, 2.0).map_err(|e| e.to_string())?,
        n: 30,
        tau: 5000,
        seed: 42,
        estimators: vec![EstimatorKind::BarianceOptimized],
        bootstrap: None,
    };
    let reps = replicate_estimates(&config).map_err(|e| e.to_string())?;
    let curve = KdeCurve::estimate(&reps[0]).map_err(|e| e.to_string())?;
    let integral = curve.integral();
    ensure((integral - 1.0).abs() < 0.02, || {
        format!("KDE integral {integral}")
    })?;
    Ok(format!(
        "planted fit exact, bariance-opt effect {opt:.0} ns, t_tail {p:.6}, KDE integral {integral:.5}"
    ))
}

fn determinism() -> Outcome {
    let study = StudyConfig {
        dist: DistributionSpec::gamma(2.0, 2.0).map_err(|e| e.to_string())?,
        n: 25,
        tau: 2000,
        seed: 42,
        estimators: EstimatorKind::STANDARD.to_vec(),
        bootstrap: Some(BootstrapConfig::default()),
    };
    let a = run_study(&study).map_err(|e| e.to_string())?;
    let b = run_study(&study).map_err(|e| e.to_string())?;
    ensure(format!("{a:?}") == format!("{b:?}"), || {
        "run_study differs".into()
    })?;

    let sweep = SweepConfig {
        n: 5,
        sigma2: 10.0,
        a_grid: SweepConfig::default_grid(),
        tau: 2000,
        seed: 42,
        bootstrap: BootstrapConfig::default(),
    };
    let a = mse_sweep(&sweep).map_err(|e| e.to_string())?;
    let b = mse_sweep(&sweep).map_err(|e| e.to_string())?;
    ensure(format!("{a:?}") == format!("{b:?}"), || {
        "mse_sweep differs".into()
    })?;

    let eq = EquivalenceConfig {
        dist: DistributionSpec::gamma(1.5, 4.0).map_err(|e| e.to_string())?,
        n_list: vec![50, 100],
        tau: 500,
        seed: 42,
        rtol: 1e-9,
        atol: 1e-9,
        resamples: 100,
    };
    let a = equivalence_study(&eq).map_err(|e| e.to_string())?;
    let b = equivalence_study(&eq).map_err(|e| e.to_string())?;
    ensure(format!("{a:?}") == format!("{b:?}"), || {
        "equivalence_study differs".into()
    })?;

    let dir = std::env::temp_dir().join(format!("bariance-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let bench_csv: PathBuf = dir.join("bench.csv");
    let bench = cli(&[
        "bench", "--n-list", "10,20,40", "--trials", "3", "--sims", "50", "--format", "csv",
    ])?;
    std::fs::write(&bench_csv, bench).map_err(|e| e.to_string())?;
    let bench_path = bench_csv.to_str().ok_or("non-utf8 temp path")?;

    let commands: [&[&str]; 8] = [
        &[
            "estimate", "1", "3", "5", "7", "9", "--a", "6", "--format", "csv",
        ],
        &[
            "simulate",
            "--n",
            "30",
            "--tau",
            "2000",
            "--resamples",
            "100",
            "--format",
            "csv",
        ],
        &[
            "simulate",
            "--dist",
            "gamma:2,2",
            "--tau",
            "500",
            "--format",
            "json",
        ],
        &["mse-sweep", "--tau", "2000", "--format", "csv"],
        &["equivalence", "--tau", "300", "--format", "csv"],
        &[
            "theory",
            "--n",
            "5",
            "--sigma2",
            "10",
            "--optimal",
            "--format",
            "json",
        ],
        &["theory", "--n", "5", "--sigma2", "10", "--a", "4,5,6"],
        &["regress", "--input", bench_path, "--format", "csv"],
    ];
    for args in commands {
        let first = cli(args)?;
        let second = cli(args)?;
        ensure(first == second, || {
            format!("{args:?} output differs between runs")
        })?;
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok(format!(
        "3 library studies and {} CLI commands reproduce bit-for-bit",
        commands.len()
    ))
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |id: u32, name: &str, outcome: Outcome| match outcome {
        Ok(detail) => println!("PASS  criterion {id}: {name}: {detail}"),
        Err(why) => {
            failures += 1;
            println!("FAIL  criterion {id}: {name}: {why}");
        }
    };

    // timing criteria run first, before the Monte Carlo work warms up the
    // thread pool and fills the caches with unrelated data
    let start = Instant::now();
    let records = bench_records();
    let bench_elapsed = start.elapsed();

    report(1, "worked example", worked_example());
    report(
        2,
        "algebraic identities on random samples",
        identity_suite(),
    );
    report(
        3,
        "naive/optimized equivalence study",
        equivalence_reproduction(),
    );
    report(4, "paired identity verification", identity_verification());
    report(5, "denominator sweep", sweep_reproduction());
    report(6, "MSE-optimal denominator", optimal_denominator());
    match &records {
        Ok(r) => {
            report(
                7,
                "runtime properties",
                runtime_properties(r, bench_elapsed),
            );
            report(8, "inference plumbing", inference_plumbing(r));
        }
        Err(e) => {
            report(7, "runtime properties", Err(e.clone()));
            report(8, "inference plumbing", Err(e.clone()));
        }
    }
    report(9, "determinism", determinism());

    if failures == 0 {
        println!("acceptance: all 9 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} of 9 criteria fail");
        ExitCode::FAILURE
    }
}
