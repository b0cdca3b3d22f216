//! Percentile bootstrap over a vector of replicate estimates.

use serde::{Deserialize, Serialize};

use super::MonteCarloError;
use crate::randgen::RngState;
use crate::summary;

/// Statistic recomputed on every resample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Statistic {
    Mean,
    /// Variance with divisor `len`.
    Variance,
    /// `(mean − target)²`.
    BiasSq {
        target: f64,
    },
    /// `mean((v − target)²)`.
    Mse {
        target: f64,
    },
}

impl Statistic {
    pub fn compute(&self, values: &[f64]) -> f64 {
        match *self {
            Self::Mean => summary::mean(values),
            Self::Variance => summary::variance(values, 0),
            Self::BiasSq { target } => {
                let b = summary::mean(values) - target;
                b * b
            }
            Self::Mse { target } => {
                values
                    .iter()
                    .map(|v| (v - target) * (v - target))
                    .sum::<f64>()
                    / values.len() as f64
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Resample count and confidence level; the resampling seed is supplied by
/// the caller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub level: f64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            resamples: 200,
            level: 0.95,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<(), MonteCarloError> {
        if self.resamples < 2 {
            return Err(MonteCarloError::Config(format!(
                "bootstrap needs at least 2 resamples, got {}",
                self.resamples
            )));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(MonteCarloError::Config(format!(
                "confidence level must lie in (0, 1), got {}",
                self.level
            )));
        }
        Ok(())
    }
}

/// Bootstrap replicates of several statistics. Every statistic sees the same
/// with-replacement resamples; the result is indexed `[statistic][resample]`.
pub fn bootstrap_distributions(
    values: &[f64],
    statistics: &[Statistic],
    resamples: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, MonteCarloError> {
    if values.len() < 2 {
        return Err(MonteCarloError::InsufficientData(values.len()));
    }
    if resamples < 2 {
        return Err(MonteCarloError::Config(format!(
            "bootstrap needs at least 2 resamples, got {resamples}"
        )));
    }
    let mut rng = RngState::new(seed);
    let mut buf = vec![0.0; values.len()];
    let mut out = vec![Vec::with_capacity(resamples); statistics.len()];
    for _ in 0..resamples {
        for slot in buf.iter_mut() {
            *slot = values[rng.index(values.len())];
        }
        for (dist, stat) in out.iter_mut().zip(statistics) {
            dist.push(stat.compute(&buf));
        }
    }
    Ok(out)
}

/// Percentile interval at `level` from bootstrap replicates.
pub fn percentile_interval(replicates: &[f64], level: f64) -> Interval {
    let sorted = summary::sorted(replicates);
    let alpha = (1.0 - level) / 2.0;
    Interval {
        lo: summary::quantile_sorted(&sorted, alpha),
        hi: summary::quantile_sorted(&sorted, 1.0 - alpha),
    }
}

/// Standard deviation of bootstrap replicates.
pub fn standard_error(replicates: &[f64]) -> f64 {
    summary::variance(replicates, 1).sqrt()
}

pub fn bootstrap_ci(
    values: &[f64],
    statistic: Statistic,
    resamples: usize,
    seed: u64,
    level: f64,
) -> Result<Interval, MonteCarloError> {
    BootstrapConfig { resamples, level }.validate()?;
    let reps = bootstrap_distributions(values, &[statistic], resamples, seed)?;
    Ok(percentile_interval(&reps[0], level))
}

pub fn bootstrap_se(
    values: &[f64],
    statistic: Statistic,
    resamples: usize,
    seed: u64,
) -> Result<f64, MonteCarloError> {
    let reps = bootstrap_distributions(values, &[statistic], resamples, seed)?;
    Ok(standard_error(&reps[0]))
}

/// Interval and standard error of one statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapEstimate {
    pub ci: Interval,
    pub se: f64,
}
