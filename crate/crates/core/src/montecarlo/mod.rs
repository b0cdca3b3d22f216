//! Replication engine for estimator-performance studies.
//!
//! Every replication `r` draws its sample from a generator seeded with
//! `child_seed(seed, r)`, so replications run in parallel yet the reduction,
//! which walks replications in index order, is identical for any thread
//! count.
//!
//! Empirical variances of replicate estimates use divisor `τ`, so that
//! `mse = variance + bias²` holds as an identity on the replicate vector.

pub mod bootstrap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimators::{
    bariance_naive, bariance_optimized, generalized_variance, EstimatorError, EstimatorKind,
};
use crate::randgen::{child_seed, sample, DistributionSpec, RandError, RngState};
use crate::summary;
use crate::theory::{theoretical_mse, TheoreticalMoments};

pub use bootstrap::{
    bootstrap_ci, bootstrap_distributions, bootstrap_se, percentile_interval, BootstrapConfig,
    BootstrapEstimate, Interval, Statistic,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonteCarloError {
    #[error("invalid study configuration: {0}")]
    Config(String),
    #[error("need at least 2 values to resample, got {0}")]
    InsufficientData(usize),
    #[error("report lacks estimator `{0}`")]
    MissingEstimator(String),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Random(#[from] RandError),
}

/// Stream tag separating bootstrap seeds from replication seeds.
const BOOTSTRAP_STREAM: u64 = 0x00b0_0757_52a9_u64;

fn bootstrap_seed(seed: u64, row: u64) -> u64 {
    child_seed(child_seed(seed, BOOTSTRAP_STREAM), row)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub dist: DistributionSpec,
    pub n: usize,
    /// Number of replications.
    pub tau: usize,
    pub seed: u64,
    pub estimators: Vec<EstimatorKind>,
    /// When set, each metric also gets a percentile interval.
    #[serde(default)]
    pub bootstrap: Option<BootstrapConfig>,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<(), MonteCarloError> {
        self.dist.validate()?;
        if self.n < 2 {
            return Err(MonteCarloError::Config(format!(
                "n must be >= 2, got {}",
                self.n
            )));
        }
        if self.tau < 2 {
            return Err(MonteCarloError::Config(format!(
                "tau must be >= 2 (variance across replications is undefined), got {}",
                self.tau
            )));
        }
        if self.estimators.is_empty() {
            return Err(MonteCarloError::Config("no estimators selected".into()));
        }
        if let Some(b) = &self.bootstrap {
            b.validate()?;
        }
        Ok(())
    }
}

/// Empirical performance of one estimator against a target value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub point_mean: f64,
    pub bias: f64,
    pub bias_sq: f64,
    pub variance: f64,
    pub mse: f64,
}

impl Metrics {
    /// Summarizes replicate estimates of `target`.
    pub fn from_replicates(values: &[f64], target: f64) -> Self {
        let point_mean = summary::mean(values);
        let bias = point_mean - target;
        Self {
            point_mean,
            bias,
            bias_sq: bias * bias,
            variance: summary::variance(values, 0),
            mse: Statistic::Mse { target }.compute(values),
        }
    }

    /// Standard error of `point_mean` implied by the replicate spread.
    pub fn standard_error(&self, tau: usize) -> f64 {
        (self.variance / (tau - 1) as f64).sqrt()
    }
}

/// Bootstrap intervals and standard errors for each metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricIntervals {
    pub point_mean: BootstrapEstimate,
    pub bias_sq: BootstrapEstimate,
    pub variance: BootstrapEstimate,
    pub mse: BootstrapEstimate,
}

impl MetricIntervals {
    pub fn compute(
        values: &[f64],
        target: f64,
        config: &BootstrapConfig,
        seed: u64,
    ) -> Result<Self, MonteCarloError> {
        let stats = [
            Statistic::Mean,
            Statistic::BiasSq { target },
            Statistic::Variance,
            Statistic::Mse { target },
        ];
        let reps = bootstrap_distributions(values, &stats, config.resamples, seed)?;
        let est = |r: &[f64]| BootstrapEstimate {
            ci: percentile_interval(r, config.level),
            se: bootstrap::standard_error(r),
        };
        Ok(Self {
            point_mean: est(&reps[0]),
            bias_sq: est(&reps[1]),
            variance: est(&reps[2]),
            mse: est(&reps[3]),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub estimator: EstimatorKind,
    #[serde(flatten)]
    pub metrics: Metrics,
    pub intervals: Option<MetricIntervals>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub config: StudyConfig,
    /// Population variance every estimator is scored against.
    pub target: f64,
    pub summaries: Vec<EstimatorSummary>,
}

impl StudyReport {
    pub fn summary(&self, kind: EstimatorKind) -> Option<&EstimatorSummary> {
        self.summaries.iter().find(|s| s.estimator == kind)
    }
}

/// Replicate estimates indexed `[estimator][replication]`. All estimators
/// of replication `r` see the same sample.
pub fn replicate_estimates(config: &StudyConfig) -> Result<Vec<Vec<f64>>, MonteCarloError> {
    config.validate()?;
    let rows: Vec<Vec<f64>> = (0..config.tau)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngState::child(config.seed, r as u64);
            let x = sample(&config.dist, config.n, &mut rng)?;
            config
                .estimators
                .iter()
                .map(|k| k.evaluate(&x).map_err(MonteCarloError::from))
                .collect()
        })
        .collect::<Result<_, MonteCarloError>>()?;
    let mut by_estimator = vec![Vec::with_capacity(config.tau); config.estimators.len()];
    for row in rows {
        for (col, v) in by_estimator.iter_mut().zip(row) {
            col.push(v);
        }
    }
    Ok(by_estimator)
}

pub fn run_study(config: &StudyConfig) -> Result<StudyReport, MonteCarloError> {
    let replicates = replicate_estimates(config)?;
    let target = config.dist.variance();
    let summaries = config
        .estimators
        .iter()
        .zip(&replicates)
        .enumerate()
        .map(|(i, (&estimator, values))| {
            let intervals = config
                .bootstrap
                .as_ref()
                .map(|b| {
                    MetricIntervals::compute(
                        values,
                        target,
                        b,
                        bootstrap_seed(config.seed, i as u64),
                    )
                })
                .transpose()?;
            Ok(EstimatorSummary {
                estimator,
                metrics: Metrics::from_replicates(values, target),
                intervals,
            })
        })
        .collect::<Result<_, MonteCarloError>>()?;
    Ok(StudyReport {
        config: config.clone(),
        target,
        summaries,
    })
}

/// How closely a paired study reproduces `Var(B) = 4·Var(Ŝ²)` and
/// `MSE(B) = 4·Var(Ŝ²) + bias(B)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub bariance: EstimatorKind,
    /// `Var(B)/Var(Ŝ²)`; 4 when the identity holds.
    pub variance_ratio: f64,
    /// `mean(B)/mean(Ŝ²)`; 2 when the identity holds.
    pub mean_ratio: f64,
    /// `|Var(B)/(4·Var(Ŝ²)) − 1|`.
    pub variance_deviation: f64,
    /// `|MSE(B) − (4·Var(Ŝ²) + bias(B)²)| / MSE(B)`.
    pub mse_deviation: f64,
    /// `4·Var(Ŝ²) + bias(B)²` as measured.
    pub predicted_mse: f64,
}

impl IdentityCheck {
    pub fn holds(&self, tol: f64) -> bool {
        self.variance_deviation <= tol && self.mse_deviation <= tol
    }
}

fn relative_gap(actual: f64, expected: f64) -> f64 {
    if actual == expected {
        0.0
    } else {
        ((actual - expected) / expected).abs()
    }
}

pub fn verify_bariance_identities(report: &StudyReport) -> Result<IdentityCheck, MonteCarloError> {
    let unbiased = report
        .summary(EstimatorKind::UnbiasedVariance)
        .ok_or_else(|| {
            MonteCarloError::MissingEstimator(EstimatorKind::UnbiasedVariance.label())
        })?;
    let bariance = report
        .summary(EstimatorKind::BarianceNaive)
        .or_else(|| report.summary(EstimatorKind::BarianceOptimized))
        .ok_or_else(|| {
            MonteCarloError::MissingEstimator("bariance-naive or bariance-opt".into())
        })?;
    let s = &unbiased.metrics;
    let b = &bariance.metrics;
    let predicted_mse = 4.0 * s.variance + b.bias_sq;
    Ok(IdentityCheck {
        bariance: bariance.estimator,
        variance_ratio: b.variance / s.variance,
        mean_ratio: b.point_mean / s.point_mean,
        variance_deviation: relative_gap(b.variance, 4.0 * s.variance),
        mse_deviation: relative_gap(predicted_mse, b.mse),
        predicted_mse,
    })
}

/// Which named denominator a sweep row corresponds to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DenominatorFlag {
    NMinusOne,
    N,
    NPlusOne,
}

impl DenominatorFlag {
    pub fn classify(n: usize, a: f64) -> Option<Self> {
        let n = n as f64;
        if a == n - 1.0 {
            Some(Self::NMinusOne)
        } else if a == n {
            Some(Self::N)
        } else if a == n + 1.0 {
            Some(Self::NPlusOne)
        } else {
            None
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::NMinusOne => "n-1",
            Self::N => "n",
            Self::NPlusOne => "n+1",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub a: f64,
    pub flag: Option<DenominatorFlag>,
    pub empirical: Metrics,
    pub intervals: MetricIntervals,
    pub theoretical: TheoreticalMoments<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n: usize,
    pub sigma2: f64,
    pub a_grid: Vec<f64>,
    pub tau: usize,
    pub seed: u64,
    pub bootstrap: BootstrapConfig,
}

impl SweepConfig {
    /// Grid `3.5, 4.0, …, 8.5`.
    pub fn default_grid() -> Vec<f64> {
        (0..=10).map(|i| 3.5 + 0.5 * i as f64).collect()
    }

    pub fn validate(&self) -> Result<(), MonteCarloError> {
        if self.n < 2 {
            return Err(MonteCarloError::Config(format!(
                "n must be >= 2, got {}",
                self.n
            )));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(MonteCarloError::Config(format!(
                "sigma2 must be positive, got {}",
                self.sigma2
            )));
        }
        if self.a_grid.is_empty() {
            return Err(MonteCarloError::Config("denominator grid is empty".into()));
        }
        if let Some(a) = self.a_grid.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(MonteCarloError::Config(format!(
                "grid value {a} is not positive"
            )));
        }
        if self.tau < 100 {
            return Err(MonteCarloError::Config(format!(
                "sweep needs tau >= 100, got {}",
                self.tau
            )));
        }
        self.bootstrap.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Row with the smallest empirical MSE.
    pub fn argmin_mse(&self) -> Option<&SweepRow> {
        self.rows
            .iter()
            .min_by(|x, y| x.empirical.mse.total_cmp(&y.empirical.mse))
    }
}

/// Empirical bias², variance and MSE of `σ̂²ₐ` for every `a` in the grid,
/// under `N(0, σ²)` sampling. All rows share the same replicate samples.
pub fn mse_sweep(config: &SweepConfig) -> Result<SweepTable, MonteCarloError> {
    config.validate()?;
    let dist = DistributionSpec::normal(0.0, config.sigma2)?;
    let grid = &config.a_grid;
    let rows: Vec<Vec<f64>> = (0..config.tau)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngState::child(config.seed, r as u64);
            let x = sample(&dist, config.n, &mut rng)?;
            grid.iter()
                .map(|&a| generalized_variance(&x, a).map_err(MonteCarloError::from))
                .collect()
        })
        .collect::<Result<_, MonteCarloError>>()?;

    let target = config.sigma2;
    let table_rows = grid
        .par_iter()
        .enumerate()
        .map(|(i, &a)| {
            let values: Vec<f64> = rows.iter().map(|row| row[i]).collect();
            let intervals = MetricIntervals::compute(
                &values,
                target,
                &config.bootstrap,
                bootstrap_seed(config.seed, i as u64),
            )?;
            let theoretical = theoretical_mse(config.n, a, config.sigma2)
                .map_err(|e| MonteCarloError::Config(e.to_string()))?;
            Ok(SweepRow {
                a,
                flag: DenominatorFlag::classify(config.n, a),
                empirical: Metrics::from_replicates(&values, target),
                intervals,
                theoretical,
            })
        })
        .collect::<Result<_, MonteCarloError>>()?;
    Ok(SweepTable {
        config: config.clone(),
        rows: table_rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceConfig {
    pub dist: DistributionSpec,
    pub n_list: Vec<usize>,
    pub tau: usize,
    pub seed: u64,
    pub rtol: f64,
    pub atol: f64,
    /// Resamples for the bootstrap standard error of the mean naïve value.
    pub resamples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceRow {
    pub n: usize,
    pub mean_naive: f64,
    pub mean_optimized: f64,
    pub max_abs_diff: f64,
    /// Bootstrap standard error of `mean_naive`.
    pub se_naive: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceTable {
    pub config: EquivalenceConfig,
    pub rows: Vec<EquivalenceRow>,
}

impl EquivalenceTable {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// Compares the pairwise and scalar-sum Bariance on `τ` samples for each `n`.
/// A row passes when every replicate satisfies
/// `|naïve − opt| ≤ atol + rtol·|naïve|`.
pub fn equivalence_study(config: &EquivalenceConfig) -> Result<EquivalenceTable, MonteCarloError> {
    config.dist.validate()?;
    if !(config.rtol > 0.0 && config.atol > 0.0) {
        return Err(MonteCarloError::Config(
            "rtol and atol must be positive".into(),
        ));
    }
    if config.tau < 2 {
        return Err(MonteCarloError::Config(format!(
            "tau must be >= 2, got {}",
            config.tau
        )));
    }
    if let Some(n) = config.n_list.iter().find(|&&n| n < 2) {
        return Err(MonteCarloError::Config(format!(
            "sample size {n} is below 2"
        )));
    }
    let rows = config
        .n_list
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let stream = child_seed(config.seed, i as u64);
            let pairs: Vec<(f64, f64)> = (0..config.tau)
                .into_par_iter()
                .map(|r| {
                    let mut rng = RngState::child(stream, r as u64);
                    let x = sample(&config.dist, n, &mut rng)?;
                    Ok((bariance_naive(&x)?, bariance_optimized(&x)?))
                })
                .collect::<Result<_, MonteCarloError>>()?;
            let naive: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let optimized: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let max_abs_diff = pairs.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let pass = pairs
                .iter()
                .all(|(a, b)| (a - b).abs() <= config.atol + config.rtol * a.abs());
            let se_naive = bootstrap_se(
                &naive,
                Statistic::Mean,
                config.resamples.max(2),
                bootstrap_seed(config.seed, i as u64),
            )?;
            Ok(EquivalenceRow {
                n,
                mean_naive: summary::mean(&naive),
                mean_optimized: summary::mean(&optimized),
                max_abs_diff,
                se_naive,
                pass,
            })
        })
        .collect::<Result<_, MonteCarloError>>()?;
    Ok(EquivalenceTable {
        config: config.clone(),
        rows,
    })
}
