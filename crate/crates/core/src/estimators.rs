//! Dispersion estimators: the biased and Bessel-corrected sample variance, the
//! pairwise "Bariance" in its quadratic and scalar-sum forms, and the
//! variance family with an arbitrary positive denominator.
//!
//! Numerical conventions:
//!
//! * The variance-style estimators use the two-pass form (mean first, then
//!   squared deviations). Only [`bariance_optimized`] accumulates raw scalar
//!   sums in a single pass.
//! * All sums run left to right in input order without compensation, so the
//!   operation counts match the textbook formulas and the benchmarks measure
//!   exactly that work.
//! * The scalar-sum formula `n·ΣX² − (ΣX)²` cancels catastrophically when the
//!   mean dominates the spread. [`SumMode::Shifted`] subtracts the first
//!   observation before accumulating, which is exact in real arithmetic
//!   because the estimator is translation invariant.
//! * A slightly negative result from rounding is clamped to zero when it lies
//!   within `tolerance · max(1, ΣX²/n)`; anything further below zero is
//!   reported as [`EstimatorError::NumericalInstability`].

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("sample is empty")]
    EmptySample,
    #[error("need at least 2 observations, got {n}")]
    InsufficientSample { n: usize },
    #[error("denominator must be positive and finite, got {a}")]
    InvalidDenominator { a: f64 },
    #[error("observation {index} is not finite")]
    NonFinite { index: usize },
    #[error("scalar-sum formula lost all precision (raw value {value:e})")]
    NumericalInstability { value: f64 },
}

/// Ordered collection of finite observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    values: Vec<T>,
}

impl<T: Real> Sample<T> {
    /// Wraps `values`, rejecting NaN and infinities. Empty samples are
    /// accepted; the estimators report their own size requirements.
    pub fn new(values: Vec<T>) -> Result<Self, EstimatorError> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(EstimatorError::NonFinite { index });
        }
        Ok(Self { values })
    }

    pub fn from_slice(values: &[T]) -> Result<Self, EstimatorError> {
        Self::new(values.to_vec())
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_inner(self) -> Vec<T> {
        self.values
    }

    fn require_pairs(&self) -> Result<usize, EstimatorError> {
        match self.values.len() {
            n if n >= 2 => Ok(n),
            n => Err(EstimatorError::InsufficientSample { n }),
        }
    }
}

impl<T> Deref for Sample<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        &self.values
    }
}

impl<T: Real> TryFrom<Vec<T>> for Sample<T> {
    type Error = EstimatorError;

    fn try_from(values: Vec<T>) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

/// Count, sum and sum of squares of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarSums<T> {
    pub n: usize,
    pub sum: T,
    pub sum_sq: T,
}

impl<T: Real> ScalarSums<T> {
    pub fn accumulate(values: &[T]) -> Self {
        let mut sum = T::zero();
        let mut sum_sq = T::zero();
        for &x in values {
            sum = sum + x;
            sum_sq = sum_sq + x * x;
        }
        Self {
            n: values.len(),
            sum,
            sum_sq,
        }
    }

    /// Sums of `values[i] - values[0]`.
    pub fn accumulate_shifted(values: &[T]) -> Self {
        let Some(&origin) = values.first() else {
            return Self::accumulate(values);
        };
        let mut sum = T::zero();
        let mut sum_sq = T::zero();
        for &x in values {
            let d = x - origin;
            sum = sum + d;
            sum_sq = sum_sq + d * d;
        }
        Self {
            n: values.len(),
            sum,
            sum_sq,
        }
    }

    /// Scale used by the negative-rounding clamp: `max(1, ΣX²/n)`.
    pub fn scale(&self) -> T {
        if self.n == 0 {
            return T::one();
        }
        T::one().max_of(self.sum_sq / T::from_count(self.n))
    }
}

/// How [`bariance_optimized_with`] accumulates its sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SumMode {
    /// Raw `ΣX` and `ΣX²`.
    #[default]
    Raw,
    /// Sums of deviations from the first observation.
    Shifted,
}

pub fn mean<T: Real>(sample: &Sample<T>) -> Result<T, EstimatorError> {
    if sample.is_empty() {
        return Err(EstimatorError::EmptySample);
    }
    Ok(mean_of(sample))
}

#[inline]
fn mean_of<T: Real>(values: &[T]) -> T {
    let mut sum = T::zero();
    for &x in values {
        sum = sum + x;
    }
    sum / T::from_count(values.len())
}

/// Σ (Xᵢ − X̄)², two passes.
#[inline]
fn centered_sum_sq<T: Real>(values: &[T]) -> T {
    let m = mean_of(values);
    let mut acc = T::zero();
    for &x in values {
        let d = x - m;
        acc = acc + d * d;
    }
    acc
}

/// Mean squared deviation, denominator `n`.
pub fn biased_variance<T: Real>(sample: &Sample<T>) -> Result<T, EstimatorError> {
    let n = sample.require_pairs()?;
    Ok(centered_sum_sq(sample) / T::from_count(n))
}

/// Bessel-corrected sample variance, denominator `n − 1`.
pub fn unbiased_variance<T: Real>(sample: &Sample<T>) -> Result<T, EstimatorError> {
    let n = sample.require_pairs()?;
    Ok(centered_sum_sq(sample) / T::from_count(n - 1))
}

/// Sum of squared deviations divided by an arbitrary positive `a`.
///
/// `a = n − 1` and `a = n` reproduce [`unbiased_variance`] and
/// [`biased_variance`] bit for bit.
pub fn generalized_variance<T: Real>(sample: &Sample<T>, a: T) -> Result<T, EstimatorError> {
    let _ = sample.require_pairs()?;
    if a <= T::zero() {
        return Err(EstimatorError::InvalidDenominator { a: a.to_f64() });
    }
    Ok(centered_sum_sq(sample) / a)
}

/// Average squared difference over all pairs `i ≠ j`, by direct enumeration.
///
/// Each unordered pair is visited once and the total doubled. The work is
/// quadratic by construction; this is the reference the scalar-sum form is
/// checked against.
pub fn bariance_naive<T: Real>(sample: &Sample<T>) -> Result<T, EstimatorError> {
    let n = sample.require_pairs()?;
    let values = sample.values();
    let mut total = T::zero();
    for (i, &xi) in values.iter().enumerate() {
        let mut row = T::zero();
        for &xj in &values[i + 1..] {
            let d = xi - xj;
            row = row + d * d;
        }
        total = total + row;
    }
    let two = T::one() + T::one();
    Ok(two * total / (T::from_count(n) * T::from_count(n - 1)))
}

/// Same quantity as [`bariance_naive`] but iterating all `n(n − 1)` ordered
/// pairs, the operation count used by the runtime benchmarks.
pub fn bariance_naive_ordered<T: Real>(sample: &Sample<T>) -> Result<T, EstimatorError> {
    let n = sample.require_pairs()?;
    let values = sample.values();
    let mut total = T::zero();
    for (i, &xi) in values.iter().enumerate() {
        for (j, &xj) in values.iter().enumerate() {
            if i != j {
                let d = xi - xj;
                total = total + d * d;
            }
        }
    }
    Ok(total / (T::from_count(n) * T::from_count(n - 1)))
}

/// Linear-time Bariance from raw scalar sums:
/// `2n/(n(n−1))·ΣX² − 2/(n(n−1))·(ΣX)²`.
pub fn bariance_optimized<T: Real>(sample: &Sample<T>) -> Result<T, EstimatorError> {
    bariance_optimized_with(sample, SumMode::Raw)
}

pub fn bariance_optimized_with<T: Real>(
    sample: &Sample<T>,
    mode: SumMode,
) -> Result<T, EstimatorError> {
    sample.require_pairs()?;
    let sums = match mode {
        SumMode::Raw => ScalarSums::accumulate(sample),
        SumMode::Shifted => ScalarSums::accumulate_shifted(sample),
    };
    bariance_from_sums(&sums)
}

/// Applies the scalar-sum Bariance formula to precomputed sums.
pub fn bariance_from_sums<T: Real>(sums: &ScalarSums<T>) -> Result<T, EstimatorError> {
    let n = sums.n;
    if n < 2 {
        return Err(EstimatorError::InsufficientSample { n });
    }
    let two = T::one() + T::one();
    let nt = T::from_count(n);
    let pairs = nt * T::from_count(n - 1);
    let raw = (two * nt / pairs) * sums.sum_sq - (two / pairs) * (sums.sum * sums.sum);
    clamp_rounding(raw, sums.scale())
}

fn clamp_rounding<T: Real>(raw: T, scale: T) -> Result<T, EstimatorError> {
    if raw >= T::zero() {
        Ok(raw)
    } else if raw > -(T::rounding_tolerance() * scale) {
        Ok(T::zero())
    } else {
        Err(EstimatorError::NumericalInstability {
            value: raw.to_f64(),
        })
    }
}

/// One of the estimator variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum EstimatorKind {
    BiasedVariance,
    UnbiasedVariance,
    BarianceNaive,
    BarianceOptimized,
    /// Denominator `a > 0`.
    Generalized(f64),
}

impl EstimatorKind {
    /// The four fixed estimators, in canonical order.
    pub const STANDARD: [EstimatorKind; 4] = [
        EstimatorKind::BiasedVariance,
        EstimatorKind::UnbiasedVariance,
        EstimatorKind::BarianceNaive,
        EstimatorKind::BarianceOptimized,
    ];

    pub fn generalized(a: f64) -> Result<Self, EstimatorError> {
        if a > 0.0 && a.is_finite() {
            Ok(Self::Generalized(a))
        } else {
            Err(EstimatorError::InvalidDenominator { a })
        }
    }

    pub fn evaluate<T: Real>(&self, sample: &Sample<T>) -> Result<T, EstimatorError> {
        match *self {
            Self::BiasedVariance => biased_variance(sample),
            Self::UnbiasedVariance => unbiased_variance(sample),
            Self::BarianceNaive => bariance_naive(sample),
            Self::BarianceOptimized => bariance_optimized(sample),
            Self::Generalized(a) => {
                if !(a > 0.0) {
                    return Err(EstimatorError::InvalidDenominator { a });
                }
                let a_t = T::from_f64(a).ok_or(EstimatorError::InvalidDenominator { a })?;
                generalized_variance(sample, a_t)
            }
        }
    }

    pub fn is_bariance(&self) -> bool {
        matches!(self, Self::BarianceNaive | Self::BarianceOptimized)
    }

    /// Position in the canonical order; generalized estimators sort last, by
    /// denominator.
    pub fn canonical_rank(&self) -> usize {
        match self {
            Self::BiasedVariance => 0,
            Self::UnbiasedVariance => 1,
            Self::BarianceNaive => 2,
            Self::BarianceOptimized => 3,
            Self::Generalized(_) => 4,
        }
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::BiasedVariance => f.write_str("biased"),
            Self::UnbiasedVariance => f.write_str("unbiased"),
            Self::BarianceNaive => f.write_str("bariance-naive"),
            Self::BarianceOptimized => f.write_str("bariance-opt"),
            Self::Generalized(a) => write!(f, "generalized:{a}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown estimator `{0}` (expected biased, unbiased, bariance-naive, bariance-opt or generalized:<a>)")]
pub struct ParseEstimatorError(pub String);

impl FromStr for EstimatorKind {
    type Err = ParseEstimatorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "biased" => return Ok(Self::BiasedVariance),
            "unbiased" => return Ok(Self::UnbiasedVariance),
            "bariance-naive" | "naive" => return Ok(Self::BarianceNaive),
            "bariance-opt" | "bariance-optimized" | "optimized" => {
                return Ok(Self::BarianceOptimized)
            }
            _ => {}
        }
        s.strip_prefix("generalized:")
            .and_then(|a| a.parse::<f64>().ok())
            .and_then(|a| Self::generalized(a).ok())
            .ok_or_else(|| ParseEstimatorError(s.to_owned()))
    }
}

impl From<EstimatorKind> for String {
    fn from(kind: EstimatorKind) -> Self {
        kind.to_string()
    }
}

impl TryFrom<String> for EstimatorKind {
    type Error = ParseEstimatorError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}
