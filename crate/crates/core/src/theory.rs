//! Closed-form bias, variance and MSE of `σ̂²ₐ = Σ(Xᵢ − X̄)²/a` under i.i.d.
//! normal sampling, and the denominator that minimizes the MSE.
//!
//! With `m = n − 1`:
//!
//! ```text
//! bias(a)     = (m − a)/a · σ²
//! var(a)      = 2m · σ⁴ / a²
//! mse(a)      = σ⁴ · ((m − a)² + 2m) / a²
//! ```
//!
//! Setting the derivative of `mse` to zero gives `a = m + 2 = n + 1` exactly.

use num_traits::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TheoryError {
    #[error("denominator must be positive, got {0}")]
    InvalidDenominator(f64),
    #[error("population variance must be positive, got {0}")]
    InvalidVariance(f64),
    #[error("need n >= 2, got {0}")]
    InsufficientSample(usize),
}

/// Bias, squared bias, variance and MSE of an estimator of `σ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoreticalMoments<F> {
    pub bias: F,
    pub bias_sq: F,
    pub variance: F,
    pub mse: F,
}

impl<F: Float> TheoreticalMoments<F> {
    /// Builds the record with `mse = bias² + variance`.
    pub fn from_bias_variance(bias: F, variance: F) -> Self {
        let bias_sq = bias * bias;
        Self {
            bias,
            bias_sq,
            variance,
            mse: bias_sq + variance,
        }
    }
}

fn cast<F: Float>(x: f64) -> F {
    F::from(x).expect("constant representable in target float")
}

fn count<F: Float>(n: usize) -> F {
    F::from(n).expect("count representable in target float")
}

fn check<F: Float>(n: usize, a: F, sigma2: F) -> Result<(), TheoryError> {
    if n < 2 {
        return Err(TheoryError::InsufficientSample(n));
    }
    if !(a > F::zero()) || !a.is_finite() {
        return Err(TheoryError::InvalidDenominator(
            a.to_f64().unwrap_or(f64::NAN),
        ));
    }
    if !(sigma2 > F::zero()) || !sigma2.is_finite() {
        return Err(TheoryError::InvalidVariance(
            sigma2.to_f64().unwrap_or(f64::NAN),
        ));
    }
    Ok(())
}

pub fn theoretical_bias<F: Float>(n: usize, a: F, sigma2: F) -> Result<F, TheoryError> {
    check(n, a, sigma2)?;
    let m = count::<F>(n - 1);
    Ok((m - a) / a * sigma2)
}

pub fn theoretical_variance<F: Float>(n: usize, a: F, sigma2: F) -> Result<F, TheoryError> {
    check(n, a, sigma2)?;
    let m = count::<F>(n - 1);
    Ok(cast::<F>(2.0) * m * sigma2 * sigma2 / (a * a))
}

pub fn theoretical_mse<F: Float>(
    n: usize,
    a: F,
    sigma2: F,
) -> Result<TheoreticalMoments<F>, TheoryError> {
    Ok(TheoreticalMoments::from_bias_variance(
        theoretical_bias(n, a, sigma2)?,
        theoretical_variance(n, a, sigma2)?,
    ))
}

/// MSE-minimizing denominator under normal sampling: exactly `n + 1`.
pub fn optimal_denominator_closed_form(n: usize) -> f64 {
    (n + 1) as f64
}

/// Lower end of the search bracket used by [`optimal_denominator_numeric`].
pub const SEARCH_LOWER: f64 = 0.5;
/// The bracket's upper end is this multiple of `n`.
pub const SEARCH_UPPER_FACTOR: f64 = 10.0;
pub const SEARCH_TOLERANCE: f64 = 1e-8;

/// Minimizes the closed-form MSE over `a ∈ [0.5, 10n]` by golden-section
/// search. Serves as an independent check on the closed form.
pub fn optimal_denominator_numeric(n: usize, sigma2: f64) -> Result<f64, TheoryError> {
    check(n, 1.0, sigma2)?;
    let upper = SEARCH_UPPER_FACTOR * n as f64;
    let objective = |a: f64| {
        theoretical_mse(n, a, sigma2)
            .map(|m| m.mse)
            .unwrap_or(f64::INFINITY)
    };
    Ok(golden_section_min(
        objective,
        SEARCH_LOWER,
        upper,
        SEARCH_TOLERANCE,
    ))
}

/// Golden-section search for the minimizer of a unimodal `f` on `[lo, hi]`,
/// stopping once the bracket is narrower than `tol`.
pub fn golden_section_min<F, G>(f: G, lo: F, hi: F, tol: F) -> F
where
    F: Float,
    G: Fn(F) -> F,
{
    let inv_phi = (cast::<F>(5.0).sqrt() - F::one()) / cast::<F>(2.0);
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        // stalls once the bracket is below the float spacing
        if !(c > a && d < b) {
            break;
        }
    }
    (a + b) / cast::<F>(2.0)
}

/// Moments of the unbiased variance `Ŝ²` and of the Bariance `2Ŝ²` under
/// normal sampling, in that order.
pub fn bariance_property_table<F: Float>(
    sigma2: F,
    n: usize,
) -> Result<(TheoreticalMoments<F>, TheoreticalMoments<F>), TheoryError> {
    check(n, F::one(), sigma2)?;
    let var_unbiased = cast::<F>(2.0) * sigma2 * sigma2 / count::<F>(n - 1);
    let unbiased = TheoreticalMoments::from_bias_variance(F::zero(), var_unbiased);
    let bariance = TheoreticalMoments::from_bias_variance(sigma2, cast::<F>(4.0) * var_unbiased);
    Ok((unbiased, bariance))
}
