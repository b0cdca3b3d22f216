use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use bariance::bench::{
    medians_by_n, paired_stats_by_n, run_benchmark, scaling_report, BenchConfig, BenchmarkRecord,
};
use bariance::estimators::{self, SumMode};
use bariance::inference::{ols_fit, t_tail, DesignMatrix};
use bariance::montecarlo::{
    equivalence_study, run_study, verify_bariance_identities, BootstrapConfig, DenominatorFlag,
    EquivalenceConfig, StudyConfig, SweepConfig,
};
use bariance::theory::{
    bariance_property_table, optimal_denominator_closed_form, optimal_denominator_numeric,
    theoretical_mse,
};
use bariance::{DistributionSpec, EstimatorKind, Sample64};
use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::error::CliError;
use crate::output::{dec5, emit, render, sig17, Metadata, Rendered};
use crate::OutputArgs;

const DEFAULT_ESTIMATORS: &str = "biased,unbiased,bariance-naive,bariance-opt";

fn finish(
    command: &'static str,
    config: &impl Serialize,
    out: &Rendered,
    args: &OutputArgs,
) -> Result<(), CliError> {
    let meta = Metadata::new(command, config);
    let text = render(&meta, out, args.format)?;
    emit(&text, args.output.as_deref())
}

fn parse_list<T: FromStr>(raw: &str, what: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .enumerate()
        .map(|(i, tok)| {
            tok.parse()
                .map_err(|e| CliError::Parse(format!("{what} item {} ('{tok}'): {e}", i + 1)))
        })
        .collect()
}

fn parse_dist(raw: &str) -> Result<DistributionSpec, CliError> {
    raw.parse()
        .map_err(|e: bariance::randgen::RandError| CliError::Parse(format!("--dist '{raw}': {e}")))
}

fn read_input(path: &Path) -> Result<String, CliError> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| CliError::Io(format!("stdin: {e}")))?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

fn is_separator(c: char) -> bool {
    c.is_whitespace() || c == ','
}

fn parse_value(tok: &str, location: String) -> Result<f64, CliError> {
    let v: f64 = tok
        .parse()
        .map_err(|_| CliError::Parse(format!("{location}: '{tok}' is not a number")))?;
    if !v.is_finite() {
        return Err(CliError::Parse(format!(
            "{location}: '{tok}' is not finite"
        )));
    }
    Ok(v)
}

// ---------------------------------------------------------------- estimate

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SumModeArg {
    Raw,
    Shifted,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Sample values, separated by whitespace or commas.
    #[arg(allow_negative_numbers = true)]
    values: Vec<String>,
    /// Read values from a file (`-` for stdin). Lines starting with `#` are skipped.
    #[arg(long, conflicts_with = "values")]
    file: Option<PathBuf>,
    /// Also report Σ(Xᵢ − X̄)²/a for these denominators.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    a: Vec<f64>,
    /// Summation used by the optimized Bariance.
    #[arg(long, value_enum, default_value_t = SumModeArg::Raw)]
    sum_mode: SumModeArg,
    #[command(flatten)]
    out: OutputArgs,
}

fn values_from_tokens(args: &[String]) -> Result<Vec<f64>, CliError> {
    args.iter()
        .flat_map(|a| a.split(is_separator).filter(|t| !t.is_empty()))
        .enumerate()
        .map(|(i, tok)| parse_value(tok, format!("token {}", i + 1)))
        .collect()
}

fn values_from_text(text: &str) -> Result<Vec<f64>, CliError> {
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.starts_with('#') {
            continue;
        }
        for tok in line.split(is_separator).filter(|t| !t.is_empty()) {
            values.push(parse_value(tok, format!("line {}", i + 1))?);
        }
    }
    Ok(values)
}

pub fn estimate(args: EstimateArgs) -> Result<(), CliError> {
    let values = match &args.file {
        Some(path) => values_from_text(&read_input(path)?)?,
        None => values_from_tokens(&args.values)?,
    };
    let x = Sample64::new(values)?;
    let mode = match args.sum_mode {
        SumModeArg::Raw => SumMode::Raw,
        SumModeArg::Shifted => SumMode::Shifted,
    };
    let mut results: Vec<(String, f64)> = vec![
        ("mean".into(), estimators::mean(&x)?),
        ("biased".into(), estimators::biased_variance(&x)?),
        ("unbiased".into(), estimators::unbiased_variance(&x)?),
        ("bariance-naive".into(), estimators::bariance_naive(&x)?),
        (
            "bariance-opt".into(),
            estimators::bariance_optimized_with(&x, mode)?,
        ),
    ];
    for &a in &args.a {
        let kind = EstimatorKind::generalized(a)?;
        results.push((kind.label(), kind.evaluate(&x)?));
    }

    let json = json!({
        "n": x.len(),
        "estimates": results.iter().map(|(k, v)| json!({"statistic": k, "value": v})).collect::<Vec<_>>(),
    });
    let mut out = Rendered::new(vec!["statistic", "value"], json);
    for (k, v) in &results {
        out.push_row(vec![k.clone(), sig17(*v)], vec![k.clone(), dec5(*v)]);
    }
    let config = json!({ "n": x.len(), "a": args.a, "sum_mode": args.sum_mode });
    finish("estimate", &config, &out, &args.out)
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Sampling distribution, `normal:mu,sigma2` or `gamma:shape,scale`.
    #[arg(long, default_value = "normal:0,1")]
    dist: String,
    /// Sample size.
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Number of replications.
    #[arg(long, default_value_t = 1000)]
    tau: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Comma-separated estimator labels.
    #[arg(long, default_value = DEFAULT_ESTIMATORS)]
    estimators: String,
    /// Bootstrap resamples for metric intervals; 0 disables them.
    #[arg(long, default_value_t = 0)]
    resamples: usize,
    /// Confidence level of the bootstrap intervals.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[command(flatten)]
    out: OutputArgs,
}

pub fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let config = StudyConfig {
        dist: parse_dist(&args.dist)?,
        n: args.n,
        tau: args.tau,
        seed: args.seed,
        estimators: parse_list(&args.estimators, "--estimators")?,
        bootstrap: (args.resamples > 0).then_some(BootstrapConfig {
            resamples: args.resamples,
            level: args.level,
        }),
    };
    let report = run_study(&config)?;
    let identity = verify_bariance_identities(&report).ok();

    let mut columns = vec![
        "estimator",
        "mean",
        "se_mean",
        "bias",
        "bias_sq",
        "variance",
        "mse",
    ];
    if config.bootstrap.is_some() {
        columns.extend([
            "bias_sq_lo",
            "bias_sq_hi",
            "variance_lo",
            "variance_hi",
            "mse_lo",
            "mse_hi",
        ]);
    }
    let json =
        json!({ "target": report.target, "summaries": report.summaries, "identity": identity });
    let mut out = Rendered::new(columns, json);
    for s in &report.summaries {
        let m = &s.metrics;
        let mut nums = vec![
            m.point_mean,
            m.standard_error(config.tau),
            m.bias,
            m.bias_sq,
            m.variance,
            m.mse,
        ];
        if let Some(iv) = &s.intervals {
            nums.extend([
                iv.bias_sq.ci.lo,
                iv.bias_sq.ci.hi,
                iv.variance.ci.lo,
                iv.variance.ci.hi,
                iv.mse.ci.lo,
                iv.mse.ci.hi,
            ]);
        }
        let label = s.estimator.label();
        out.push_row(
            std::iter::once(label.clone())
                .chain(nums.iter().map(|v| sig17(*v)))
                .collect(),
            std::iter::once(label)
                .chain(nums.iter().map(|v| dec5(*v)))
                .collect(),
        );
    }
    out.notes
        .push(format!("target variance: {}", sig17(report.target)));
    if let Some(c) = identity {
        out.notes.push(format!(
            "identity ({}): variance ratio {} (expect 4), mean ratio {} (expect 2), mse gap {}",
            c.bariance.label(),
            sig17(c.variance_ratio),
            sig17(c.mean_ratio),
            sig17(c.mse_deviation),
        ));
    }
    finish("simulate", &config, &out, &args.out)
}

// ---------------------------------------------------------------- mse-sweep

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 5)]
    n: usize,
    /// Population variance of the normal sampling distribution.
    #[arg(long, default_value_t = 10.0)]
    sigma2: f64,
    /// Comma-separated denominators (default 3.5,4,…,8.5).
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    tau: usize,
    #[arg(long, default_value_t = 200)]
    resamples: usize,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    out: OutputArgs,
}

pub fn mse_sweep(args: SweepArgs) -> Result<(), CliError> {
    let a_grid = match &args.grid {
        Some(g) => parse_list(g, "--grid")?,
        None => SweepConfig::default_grid(),
    };
    let config = SweepConfig {
        n: args.n,
        sigma2: args.sigma2,
        a_grid,
        tau: args.tau,
        seed: args.seed,
        bootstrap: BootstrapConfig {
            resamples: args.resamples,
            level: args.level,
        },
    };
    let table = bariance::montecarlo::mse_sweep(&config)?;

    let columns = vec![
        "a",
        "flag",
        "bias_sq",
        "bias_sq_lo",
        "bias_sq_hi",
        "variance",
        "variance_lo",
        "variance_hi",
        "mse",
        "mse_lo",
        "mse_hi",
        "theory_bias_sq",
        "theory_variance",
        "theory_mse",
    ];
    let json = json!({ "rows": table.rows, "argmin_mse": table.argmin_mse().map(|r| r.a) });
    let mut out = Rendered::new(columns, json);
    for r in &table.rows {
        let (e, iv, t) = (&r.empirical, &r.intervals, &r.theoretical);
        let nums = [
            e.bias_sq,
            iv.bias_sq.ci.lo,
            iv.bias_sq.ci.hi,
            e.variance,
            iv.variance.ci.lo,
            iv.variance.ci.hi,
            e.mse,
            iv.mse.ci.lo,
            iv.mse.ci.hi,
            t.bias_sq,
            t.variance,
            t.mse,
        ];
        let head = |a: String| {
            vec![
                a,
                r.flag
                    .as_ref()
                    .map(DenominatorFlag::label)
                    .unwrap_or("")
                    .to_string(),
            ]
        };
        out.push_row(
            head(r.a.to_string())
                .into_iter()
                .chain(nums.iter().map(|v| sig17(*v)))
                .collect(),
            head(r.a.to_string())
                .into_iter()
                .chain(nums.iter().map(|v| dec5(*v)))
                .collect(),
        );
    }
    if let Some(best) = table.argmin_mse() {
        out.notes.push(format!(
            "empirical argmin a = {}; closed-form optimum a = {}",
            best.a,
            optimal_denominator_closed_form(config.n)
        ));
    }
    finish("mse-sweep", &config, &out, &args.out)
}

// ---------------------------------------------------------------- equivalence

#[derive(Debug, Args)]
pub struct EquivalenceArgs {
    #[arg(long, default_value = "gamma:1.5,4")]
    dist: String,
    #[arg(long, default_value = "50,100,150,200,250")]
    n_list: String,
    #[arg(long, default_value_t = 1000)]
    tau: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    rtol: f64,
    #[arg(long, default_value_t = 1e-9)]
    atol: f64,
    /// Bootstrap resamples for the standard error of the naive mean.
    #[arg(long, default_value_t = 200)]
    resamples: usize,
    #[command(flatten)]
    out: OutputArgs,
}

pub fn equivalence(args: EquivalenceArgs) -> Result<(), CliError> {
    let config = EquivalenceConfig {
        dist: parse_dist(&args.dist)?,
        n_list: parse_list(&args.n_list, "--n-list")?,
        tau: args.tau,
        seed: args.seed,
        rtol: args.rtol,
        atol: args.atol,
        resamples: args.resamples,
    };
    let table = equivalence_study(&config)?;
    let columns = vec![
        "n",
        "mean_naive",
        "mean_optimized",
        "max_abs_diff",
        "se_naive",
        "pass",
    ];
    let json = json!({ "rows": table.rows, "all_pass": table.all_pass() });
    let mut out = Rendered::new(columns, json);
    for r in &table.rows {
        let nums = [r.mean_naive, r.mean_optimized, r.max_abs_diff, r.se_naive];
        let n = r.n.to_string();
        let pass = r.pass.to_string();
        out.push_row(
            std::iter::once(n.clone())
                .chain(nums.iter().map(|v| sig17(*v)))
                .chain([pass.clone()])
                .collect(),
            std::iter::once(n)
                .chain(nums.iter().map(|v| dec5(*v)))
                .chain([pass])
                .collect(),
        );
    }
    out.notes.push(format!(
        "expected Bariance {}; all rows pass: {}",
        sig17(2.0 * config.dist.variance()),
        table.all_pass()
    ));
    finish("equivalence", &config, &out, &args.out)
}

// ---------------------------------------------------------------- bench

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    /// One row per (estimator, n, trial) timing.
    Records,
    /// One row per n with the median trial time of each estimator, in seconds.
    Summary,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value = "normal:0,1")]
    dist: String,
    #[arg(long, default_value = "10,20,30,40,50,60,70,80,90,100")]
    n_list: String,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    /// Estimator evaluations per timed trial.
    #[arg(long, visible_alias = "sims-per-trial", default_value_t = 1000)]
    sims: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Untimed batches before the first trial.
    #[arg(long, default_value_t = BenchConfig::DEFAULT_WARMUP)]
    warmup: usize,
    #[arg(long, default_value = DEFAULT_ESTIMATORS)]
    estimators: String,
    /// Estimator pairs for paired timing tests, e.g. `unbiased,bariance-opt`.
    /// Repeatable.
    #[arg(long, default_value = "unbiased,bariance-opt")]
    pair: Vec<String>,
    #[arg(long, value_enum, default_value_t = Layout::Records)]
    layout: Layout,
    #[command(flatten)]
    out: OutputArgs,
}

fn parse_pair(raw: &str) -> Result<(EstimatorKind, EstimatorKind), CliError> {
    match parse_list::<EstimatorKind>(raw, "--pair")?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(CliError::Parse(format!(
            "--pair '{raw}': expected two estimators"
        ))),
    }
}

pub fn bench(args: BenchArgs) -> Result<(), CliError> {
    let config = BenchConfig {
        dist: parse_dist(&args.dist)?,
        n_list: parse_list(&args.n_list, "--n-list")?,
        trials: args.trials,
        sims_per_trial: args.sims,
        seed: args.seed,
        warmup: args.warmup,
        estimators: parse_list(&args.estimators, "--estimators")?,
    };
    let pairs = args
        .pair
        .iter()
        .map(|p| parse_pair(p))
        .collect::<Result<Vec<_>, _>>()?;
    let pairs: Vec<_> = pairs
        .into_iter()
        .filter(|(a, b)| config.estimators.contains(a) && config.estimators.contains(b))
        .collect();
    let records = run_benchmark(&config)?;

    let scaling = scaling_report(&records);
    let mut paired = Vec::new();
    for &(a, b) in &pairs {
        paired.push((a, b, paired_stats_by_n(&records, a, b)?));
    }

    let mut notes = Vec::new();
    match &scaling {
        Ok(slopes) => {
            for s in slopes {
                notes.push(format!(
                    "scaling {}: log-log slope {} intercept {}",
                    s.estimator.label(),
                    sig17(s.slope),
                    sig17(s.intercept)
                ));
            }
        }
        Err(e) => notes.push(format!("scaling unavailable: {e}")),
    }
    for (a, b, rows) in &paired {
        for (n, d) in rows {
            notes.push(format!(
                "paired {} - {} n={n}: mean_diff_ns {} sd {} t {} p {} ci [{}, {}]{}",
                a.label(),
                b.label(),
                sig17(d.mean_diff),
                sig17(d.sd),
                sig17(d.t),
                sig17(d.p),
                sig17(d.ci_lo),
                sig17(d.ci_hi),
                if d.exact { " exact" } else { "" },
            ));
        }
    }

    let paired_json: Vec<_> = paired
        .iter()
        .map(|(a, b, rows)| {
            json!({
                "a": a, "b": b,
                "by_n": rows.iter().map(|(n, d)| json!({"n": n, "stats": d})).collect::<Vec<_>>(),
            })
        })
        .collect();
    let scaling_json = match &scaling {
        Ok(s) => json!(s),
        Err(e) => json!({ "error": e.to_string() }),
    };

    let mut out = match args.layout {
        Layout::Records => {
            let json =
                json!({ "records": records, "scaling": scaling_json, "paired": paired_json });
            let mut out = Rendered::new(
                vec!["estimator", "n", "trial", "elapsed_ns", "checksum"],
                json,
            );
            for r in &records {
                let head = [
                    r.estimator.label(),
                    r.n.to_string(),
                    r.trial.to_string(),
                    r.elapsed_ns.to_string(),
                ];
                out.push_row(
                    head.iter().cloned().chain([sig17(r.checksum)]).collect(),
                    head.iter().cloned().chain([dec5(r.checksum)]).collect(),
                );
            }
            out
        }
        Layout::Summary => summary_layout(&config, &records, scaling_json, paired_json),
    };
    out.notes = notes;
    finish("bench", &config, &out, &args.out)
}

fn summary_layout(
    config: &BenchConfig,
    records: &[BenchmarkRecord],
    scaling_json: serde_json::Value,
    paired_json: Vec<serde_json::Value>,
) -> Rendered {
    let medians: Vec<Vec<(usize, f64)>> = config
        .estimators
        .iter()
        .map(|&k| medians_by_n(records, k))
        .collect();
    let labels: Vec<String> = config.estimators.iter().map(|k| k.label()).collect();
    let mut rows_json = Vec::new();
    let mut csv_rows = Vec::new();
    let mut table_rows = Vec::new();
    for (i, &n) in config.n_list.iter().enumerate() {
        let secs: Vec<f64> = medians.iter().map(|m| m[i].1 * 1e-9).collect();
        let fastest = secs
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(j, _)| labels[j].clone())
            .unwrap_or_default();
        rows_json.push(json!({ "n": n, "median_seconds": labels.iter().zip(&secs).map(|(l, s)| (l.clone(), json!(s))).collect::<serde_json::Map<_, _>>(), "fastest": fastest }));
        csv_rows.push(
            std::iter::once(n.to_string())
                .chain(secs.iter().map(|s| sig17(*s)))
                .chain([fastest.clone()])
                .collect(),
        );
        table_rows.push(
            std::iter::once(n.to_string())
                .chain(secs.iter().map(|s| format!("{s:.6}")))
                .chain([fastest])
                .collect(),
        );
    }
    let json = json!({ "rows": rows_json, "scaling": scaling_json, "paired": paired_json });
    let mut out = Rendered::new(vec!["n"], json);
    out.columns.extend(labels.iter().map(|l| format!("{l}_s")));
    out.columns.push("fastest".into());
    out.csv_rows = csv_rows;
    out.table_rows = table_rows;
    out
}

// ---------------------------------------------------------------- regress

#[derive(Debug, Args)]
pub struct RegressArgs {
    /// Benchmark CSV as written by `bench --format csv` (`-` for stdin).
    #[arg(long, default_value = "-")]
    input: PathBuf,
    #[command(flatten)]
    out: OutputArgs,
}

fn read_records(text: &str) -> Result<Vec<BenchmarkRecord>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    reader
        .deserialize()
        .map(|r| {
            r.map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                CliError::Parse(format!("benchmark CSV line {line}: {e}"))
            })
        })
        .collect()
}

pub fn regress(args: RegressArgs) -> Result<(), CliError> {
    let records = read_records(&read_input(&args.input)?)?;
    let design = DesignMatrix::fixed_effects(&records)?;
    let fit = ols_fit(&design)?;
    let dof = fit.n_obs.saturating_sub(fit.terms.len()) as f64;

    let mut rows = Vec::new();
    for ((term, &b), &se) in fit
        .terms
        .iter()
        .zip(&fit.coefficients)
        .zip(&fit.standard_errors)
    {
        let t = b / se;
        let p = if dof > 0.0 && t.is_finite() {
            t_tail(t, dof)
        } else {
            f64::NAN
        };
        rows.push((term.clone(), b, se, t, p));
    }
    let json = json!({
        "terms": rows.iter().map(|(term, b, se, t, p)| json!({
            "term": term, "coefficient": b, "std_error": se, "t": t, "p": p,
        })).collect::<Vec<_>>(),
        "r_squared": fit.r_squared,
        "n_obs": fit.n_obs,
        "residual_sum_sq": fit.residual_sum_sq,
    });
    let mut out = Rendered::new(vec!["term", "coefficient", "std_error", "t", "p"], json);
    for (term, b, se, t, p) in &rows {
        let nums = [*b, *se, *t, *p];
        out.push_row(
            std::iter::once(term.clone())
                .chain(nums.iter().map(|v| sig17(*v)))
                .collect(),
            std::iter::once(term.clone())
                .chain(nums.iter().map(|v| dec5(*v)))
                .collect(),
        );
    }
    out.notes.push(format!(
        "r_squared {} n_obs {}",
        sig17(fit.r_squared),
        fit.n_obs
    ));
    let config = json!({ "input": args.input, "records": records.len() });
    finish("regress", &config, &out, &args.out)
}

// ---------------------------------------------------------------- theory

#[derive(Debug, Args)]
pub struct TheoryArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    /// Denominators to evaluate (default n−1, n, n+1).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    a: Vec<f64>,
    /// Report the MSE-minimizing denominator instead.
    #[arg(long, conflicts_with_all = ["a", "bariance"])]
    optimal: bool,
    /// Compare the unbiased variance with the Bariance.
    #[arg(long, conflicts_with = "a")]
    bariance: bool,
    #[command(flatten)]
    out: OutputArgs,
}

pub fn theory(args: TheoryArgs) -> Result<(), CliError> {
    let config = json!({ "n": args.n, "sigma2": args.sigma2, "a": args.a, "optimal": args.optimal, "bariance": args.bariance });
    let moment_columns = |first: &'static str| vec![first, "bias", "bias_sq", "variance", "mse"];
    let push = |out: &mut Rendered, label: String, m: &bariance::TheoreticalMoments<f64>| {
        let nums = [m.bias, m.bias_sq, m.variance, m.mse];
        out.push_row(
            std::iter::once(label.clone())
                .chain(nums.iter().map(|v| sig17(*v)))
                .collect(),
            std::iter::once(label)
                .chain(nums.iter().map(|v| dec5(*v)))
                .collect(),
        );
    };

    let out = if args.optimal {
        let closed = optimal_denominator_closed_form(args.n);
        let numeric = optimal_denominator_numeric(args.n, args.sigma2)?;
        let mse = theoretical_mse(args.n, closed, args.sigma2)?.mse;
        let json = json!({ "closed_form": closed, "numeric": numeric, "mse": mse });
        let mut out = Rendered::new(vec!["method", "a", "mse"], json);
        for (label, a) in [("closed-form", closed), ("golden-section", numeric)] {
            let m = theoretical_mse(args.n, a, args.sigma2)?.mse;
            out.push_row(
                vec![label.into(), sig17(a), sig17(m)],
                vec![label.into(), format!("{a:.8}"), dec5(m)],
            );
        }
        out
    } else if args.bariance {
        let (s2, b) = bariance_property_table(args.sigma2, args.n)?;
        let mut out = Rendered::new(
            moment_columns("estimator"),
            json!({ "unbiased": s2, "bariance": b }),
        );
        push(&mut out, "unbiased".into(), &s2);
        push(&mut out, "bariance".into(), &b);
        out
    } else {
        let grid = if args.a.is_empty() {
            let n = args.n as f64;
            vec![n - 1.0, n, n + 1.0]
        } else {
            args.a.clone()
        };
        let mut rows = Vec::new();
        for &a in &grid {
            rows.push((a, theoretical_mse(args.n, a, args.sigma2)?));
        }
        let json = json!(rows
            .iter()
            .map(|(a, m)| json!({ "a": a, "moments": m }))
            .collect::<Vec<_>>());
        let mut out = Rendered::new(moment_columns("a"), json);
        for (a, m) in &rows {
            push(&mut out, a.to_string(), m);
        }
        out
    };
    finish("theory", &config, &out, &args.out)
}
