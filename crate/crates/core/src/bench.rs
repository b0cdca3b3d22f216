//! Single-threaded wall-clock benchmarks of the estimator implementations.
//!
//! For every sample size and trial one dataset is drawn and shared by all
//! estimators. Each estimator is then timed over a batch of
//! `sims_per_trial` evaluations and the batch total is recorded, which keeps
//! small-`n` measurements above the clock resolution. Results are folded
//! into a per-record checksum so the measured work cannot be elided.
//!
//! The naïve Bariance is timed through the ordered-pair loop, i.e. the full
//! `n(n − 1)` term count.

use std::collections::BTreeMap;
use std::hint::black_box;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimators::{
    bariance_naive_ordered, bariance_optimized, biased_variance, unbiased_variance, EstimatorError,
    EstimatorKind, Sample,
};
use crate::inference::{t_quantile, t_tail};
use crate::randgen::{child_seed, sample, DistributionSpec, RandError, RngState};
use crate::summary;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchError {
    #[error("invalid benchmark configuration: {0}")]
    Config(String),
    #[error("monotonic clock unavailable or went backwards")]
    Clock,
    #[error("need at least 3 sample sizes spanning a {min_span}x range for `{estimator}`")]
    InsufficientRange { estimator: String, min_span: f64 },
    #[error("records are not paired: {0}")]
    MismatchedRecords(String),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Random(#[from] RandError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub dist: DistributionSpec,
    pub n_list: Vec<usize>,
    /// Independent trials per sample size.
    pub trials: usize,
    pub sims_per_trial: usize,
    pub seed: u64,
    /// Untimed batches run before the first trial of each (estimator, n).
    pub warmup: usize,
    pub estimators: Vec<EstimatorKind>,
}

impl BenchConfig {
    pub const DEFAULT_WARMUP: usize = 3;

    pub fn validate(&self) -> Result<(), BenchError> {
        self.dist.validate()?;
        if self.trials < 2 {
            return Err(BenchError::Config(format!(
                "trials must be >= 2 for paired statistics, got {}",
                self.trials
            )));
        }
        if self.sims_per_trial == 0 {
            return Err(BenchError::Config("sims_per_trial must be positive".into()));
        }
        if let Some(n) = self.n_list.iter().find(|&&n| n < 2) {
            return Err(BenchError::Config(format!("sample size {n} is below 2")));
        }
        if let Some(k) = self
            .estimators
            .iter()
            .find(|k| matches!(k, EstimatorKind::Generalized(_)))
        {
            return Err(BenchError::Config(format!(
                "`{k}` is not a benchmarked estimator"
            )));
        }
        if self.estimators.is_empty() {
            return Err(BenchError::Config("no estimators selected".into()));
        }
        Ok(())
    }
}

/// Batch timing of one estimator on one trial's dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub estimator: EstimatorKind,
    pub n: usize,
    pub trial: usize,
    pub elapsed_ns: u64,
    /// Sum of the estimates produced inside the timed batch.
    pub checksum: f64,
}

/// Host description written next to benchmark output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Environment {
    pub os: String,
    pub arch: String,
    pub logical_cores: usize,
    pub clock_source: String,
}

impl Environment {
    pub fn capture() -> Self {
        Self {
            os: std::env::consts::OS.to_owned(),
            arch: std::env::consts::ARCH.to_owned(),
            logical_cores: std::thread::available_parallelism().map_or(1, |n| n.get()),
            clock_source: if cfg!(target_os = "linux") {
                "std::time::Instant (CLOCK_MONOTONIC)".to_owned()
            } else {
                "std::time::Instant".to_owned()
            },
        }
    }
}

/// Estimator as timed by the benchmark.
pub fn timed_kernel(kind: EstimatorKind) -> fn(&Sample<f64>) -> Result<f64, EstimatorError> {
    match kind {
        EstimatorKind::BiasedVariance => biased_variance,
        EstimatorKind::UnbiasedVariance => unbiased_variance,
        EstimatorKind::BarianceNaive => bariance_naive_ordered,
        EstimatorKind::BarianceOptimized => bariance_optimized,
        EstimatorKind::Generalized(_) => unreachable!("rejected by BenchConfig::validate"),
    }
}

fn run_batch(
    kernel: fn(&Sample<f64>) -> Result<f64, EstimatorError>,
    data: &Sample<f64>,
    sims: usize,
) -> Result<f64, EstimatorError> {
    let mut checksum = 0.0;
    for _ in 0..sims {
        checksum += black_box(kernel(black_box(data))?);
    }
    Ok(checksum)
}

/// Runs the benchmark on the calling thread.
pub fn run_benchmark(config: &BenchConfig) -> Result<Vec<BenchmarkRecord>, BenchError> {
    config.validate()?;
    let mut records =
        Vec::with_capacity(config.n_list.len() * config.trials * config.estimators.len());
    for (ni, &n) in config.n_list.iter().enumerate() {
        let stream = child_seed(config.seed, ni as u64);
        for trial in 0..config.trials {
            let mut rng = RngState::child(stream, trial as u64);
            let data = sample(&config.dist, n, &mut rng)?;
            for &kind in &config.estimators {
                let kernel = timed_kernel(kind);
                if trial == 0 {
                    for _ in 0..config.warmup {
                        black_box(run_batch(kernel, &data, config.sims_per_trial)?);
                    }
                }
                let start = Instant::now();
                let checksum = run_batch(kernel, &data, config.sims_per_trial)?;
                let elapsed = Instant::now()
                    .checked_duration_since(start)
                    .ok_or(BenchError::Clock)?;
                let elapsed_ns =
                    u64::try_from(elapsed.as_nanos()).map_err(|_| BenchError::Clock)?;
                records.push(BenchmarkRecord {
                    estimator: kind,
                    n,
                    trial,
                    elapsed_ns,
                    checksum,
                });
            }
        }
    }
    Ok(records)
}

/// Total elapsed nanoseconds per (estimator, n).
pub fn totals(records: &[BenchmarkRecord]) -> BTreeMap<(usize, usize), u64> {
    let mut out = BTreeMap::new();
    for r in records {
        *out.entry((r.estimator.canonical_rank(), r.n)).or_insert(0) += r.elapsed_ns;
    }
    out
}

/// Median elapsed time per n for one estimator, ordered by n.
pub fn medians_by_n(records: &[BenchmarkRecord], kind: EstimatorKind) -> Vec<(usize, f64)> {
    let mut grouped: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.estimator == kind) {
        grouped.entry(r.n).or_default().push(r.elapsed_ns as f64);
    }
    grouped
        .into_iter()
        .map(|(n, v)| (n, summary::median(&v)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSlope {
    pub estimator: EstimatorKind,
    /// Exponent of the fitted power law `time ∝ n^slope`.
    pub slope: f64,
    pub intercept: f64,
    /// `(n, median elapsed ns)` points used by the fit.
    pub points: Vec<(usize, f64)>,
}

/// Minimum ratio between the largest and smallest `n` in a scaling fit.
pub const MIN_SCALING_SPAN: f64 = 8.0;

/// Least-squares slope of `log(median elapsed)` against `log(n)` for each
/// estimator present in `records`.
pub fn scaling_report(records: &[BenchmarkRecord]) -> Result<Vec<ScalingSlope>, BenchError> {
    scaling_report_with_span(records, MIN_SCALING_SPAN)
}

pub fn scaling_report_with_span(
    records: &[BenchmarkRecord],
    min_span: f64,
) -> Result<Vec<ScalingSlope>, BenchError> {
    let mut kinds: Vec<EstimatorKind> = Vec::new();
    for r in records {
        if !kinds.contains(&r.estimator) {
            kinds.push(r.estimator);
        }
    }
    kinds.sort_by_key(EstimatorKind::canonical_rank);
    kinds
        .into_iter()
        .map(|kind| {
            let points = medians_by_n(records, kind);
            let insufficient = || BenchError::InsufficientRange {
                estimator: kind.label(),
                min_span,
            };
            let (first, last) = match (points.first(), points.last()) {
                (Some(f), Some(l)) => (f.0 as f64, l.0 as f64),
                _ => return Err(insufficient()),
            };
            if points.len() < 3 || last / first < min_span || points.iter().any(|p| p.1 <= 0.0) {
                return Err(insufficient());
            }
            let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
            let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
            let (slope, intercept) = simple_regression(&xs, &ys);
            Ok(ScalingSlope {
                estimator: kind,
                slope,
                intercept,
                points,
            })
        })
        .collect()
}

fn simple_regression(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let mx = summary::mean(xs);
    let my = summary::mean(ys);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Paired t statistics on per-trial runtime differences `A − B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffStats {
    pub pairs: usize,
    pub mean_diff: f64,
    pub sd: f64,
    pub t: f64,
    pub p: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Set when the differences have zero spread; `t` and `p` then follow
    /// from the sign of the mean alone.
    pub exact: bool,
}

/// Pairs records of two estimators by `(n, trial)` and tests the mean
/// difference `a − b` against zero.
pub fn paired_difference_stats(
    a: &[BenchmarkRecord],
    b: &[BenchmarkRecord],
) -> Result<DiffStats, BenchError> {
    if a.len() != b.len() {
        return Err(BenchError::MismatchedRecords(format!(
            "{} records vs {}",
            a.len(),
            b.len()
        )));
    }
    let mut lookup: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for r in b {
        if lookup.insert((r.n, r.trial), r.elapsed_ns).is_some() {
            return Err(BenchError::MismatchedRecords(format!(
                "duplicate (n={}, trial={})",
                r.n, r.trial
            )));
        }
    }
    let diffs: Vec<f64> = a
        .iter()
        .map(|r| {
            lookup
                .remove(&(r.n, r.trial))
                .map(|other| r.elapsed_ns as f64 - other as f64)
                .ok_or_else(|| {
                    BenchError::MismatchedRecords(format!(
                        "no partner for (n={}, trial={})",
                        r.n, r.trial
                    ))
                })
        })
        .collect::<Result<_, _>>()?;
    if diffs.len() < 2 {
        return Err(BenchError::MismatchedRecords(format!(
            "need at least 2 pairs, got {}",
            diffs.len()
        )));
    }
    Ok(diff_stats(&diffs))
}

/// One-sample t analysis of paired differences.
pub fn diff_stats(diffs: &[f64]) -> DiffStats {
    let pairs = diffs.len();
    let mean_diff = summary::mean(diffs);
    let sd = summary::variance(diffs, 1).sqrt();
    let dof = (pairs - 1) as f64;
    if sd == 0.0 {
        let (t, p) = if mean_diff == 0.0 {
            (0.0, 1.0)
        } else {
            (mean_diff.signum() * f64::INFINITY, 0.0)
        };
        return DiffStats {
            pairs,
            mean_diff,
            sd,
            t,
            p,
            ci_lo: mean_diff,
            ci_hi: mean_diff,
            exact: true,
        };
    }
    let se = sd / (pairs as f64).sqrt();
    let t = mean_diff / se;
    let half = t_quantile(0.975, dof) * se;
    DiffStats {
        pairs,
        mean_diff,
        sd,
        t,
        p: t_tail(t, dof),
        ci_lo: mean_diff - half,
        ci_hi: mean_diff + half,
        exact: false,
    }
}

/// Paired statistics of `a − b` for every sample size present in both.
pub fn paired_stats_by_n(
    records: &[BenchmarkRecord],
    a: EstimatorKind,
    b: EstimatorKind,
) -> Result<Vec<(usize, DiffStats)>, BenchError> {
    let mut ns: Vec<usize> = records.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    ns.into_iter()
        .map(|n| {
            let pick = |k: EstimatorKind| -> Vec<BenchmarkRecord> {
                records
                    .iter()
                    .filter(|r| r.n == n && r.estimator == k)
                    .copied()
                    .collect()
            };
            Ok((n, paired_difference_stats(&pick(a), &pick(b))?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn planted(
        kind: EstimatorKind,
        ns: &[usize],
        f: impl Fn(usize) -> u64,
    ) -> Vec<BenchmarkRecord> {
        ns.iter()
            .flat_map(|&n| {
                let t = f(n);
                (0..3).map(move |trial| BenchmarkRecord {
                    estimator: kind,
                    n,
                    trial,
                    elapsed_ns: t,
                    checksum: 0.0,
                })
            })
            .collect()
    }

    fn small_config() -> BenchConfig {
        BenchConfig {
            dist: DistributionSpec::gamma(2.0, 2.0).unwrap(),
            n_list: vec![10, 40],
            trials: 3,
            sims_per_trial: 20,
            seed: 42,
            warmup: 1,
            estimators: EstimatorKind::STANDARD.to_vec(),
        }
    }

    #[test]
    fn planted_power_law_slope() {
        let ns = [10, 20, 40, 80, 160];
        let recs = planted(EstimatorKind::BarianceNaive, &ns, |n| 7 * (n as u64).pow(2));
        let slopes = scaling_report(&recs).unwrap();
        assert_eq!(slopes.len(), 1);
        assert!((slopes[0].slope - 2.0).abs() < 1e-9, "{}", slopes[0].slope);
    }

    #[test]
    fn scaling_needs_range() {
        let recs = planted(EstimatorKind::BarianceOptimized, &[100, 200, 300], |n| {
            n as u64
        });
        assert!(matches!(
            scaling_report(&recs),
            Err(BenchError::InsufficientRange { .. })
        ));
        let two = planted(EstimatorKind::BarianceOptimized, &[10, 1000], |n| n as u64);
        assert!(scaling_report(&two).is_err());
    }

    #[test]
    fn records_and_checksums() {
        let config = small_config();
        let records = run_benchmark(&config).unwrap();
        assert_eq!(records.len(), 2 * 3 * 4);
        for r in &records {
            // regenerate the trial's data and compare with untimed evaluation
            let ni = config.n_list.iter().position(|&n| n == r.n).unwrap();
            let mut rng = RngState::child(child_seed(config.seed, ni as u64), r.trial as u64);
            let data = sample(&config.dist, r.n, &mut rng).unwrap();
            let value = r.estimator.evaluate(&data).unwrap();
            let expected = value * config.sims_per_trial as f64;
            assert!(
                (r.checksum - expected).abs() <= 1e-9 * expected.abs(),
                "{r:?}"
            );
        }
    }

    #[test]
    fn config_errors() {
        let mut c = small_config();
        c.trials = 1;
        assert!(matches!(run_benchmark(&c), Err(BenchError::Config(_))));
        let mut c = small_config();
        c.estimators = vec![EstimatorKind::Generalized(3.0)];
        assert!(run_benchmark(&c).is_err());
        let mut c = small_config();
        c.n_list.clear();
        assert!(run_benchmark(&c).unwrap().is_empty());
    }

    #[test]
    fn identical_records_give_null_difference() {
        let recs = planted(EstimatorKind::UnbiasedVariance, &[10], |_| 500);
        let stats = paired_difference_stats(&recs, &recs).unwrap();
        assert_eq!(stats.mean_diff, 0.0);
        assert_eq!(stats.p, 1.0);
        assert!(stats.exact);
    }

    #[test]
    fn constant_difference_is_exact() {
        let stats = diff_stats(&[1.0, 1.0, 1.0, 1.0]);
        assert_eq!((stats.ci_lo, stats.ci_hi), (1.0, 1.0));
        assert!(stats.exact);
        assert_eq!(stats.p, 0.0);
    }

    #[test]
    fn planted_shift_is_highly_significant() {
        let mut rng = RngState::new(17);
        let diffs: Vec<f64> = (0..100).map(|_| 5.0 + rng.standard_normal()).collect();
        let stats = diff_stats(&diffs);
        let expected_t = summary::mean(&diffs) / (summary::variance(&diffs, 1).sqrt() / 10.0);
        assert!((stats.t - expected_t).abs() < 1e-12);
        assert!(stats.t > 40.0 && stats.t < 60.0, "{}", stats.t);
        assert!(stats.p < 1e-10);
        assert!(stats.ci_lo < stats.mean_diff && stats.mean_diff < stats.ci_hi);
    }

    #[test]
    fn mismatched_pairs() {
        let a = planted(EstimatorKind::UnbiasedVariance, &[10], |_| 5);
        let b = planted(EstimatorKind::BiasedVariance, &[20], |_| 5);
        assert!(matches!(
            paired_difference_stats(&a, &b),
            Err(BenchError::MismatchedRecords(_))
        ));
        assert!(paired_difference_stats(&a, &b[..2]).is_err());
    }
}
