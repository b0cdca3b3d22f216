//! Variance and Bariance estimators with the tooling to study them.
//!
//! * [`estimators`]: biased and unbiased sample variance, the pairwise
//!   Bariance (quadratic and linear-time forms) and the arbitrary-denominator
//!   family, generic over [`Real`] scalars.
//! * [`theory`]: closed-form bias/variance/MSE under normal sampling and the
//!   MSE-optimal denominator.
//! * [`randgen`]: seedable normal and gamma sampling.
//! * [`montecarlo`]: replication studies, denominator sweeps, bootstrap
//!   intervals and the naïve/optimized equivalence check.
//! * [`bench`]: wall-clock benchmarks, scaling slopes and paired t tests.
//! * [`inference`]: fixed-effects OLS, Student-t tails, kernel densities.

pub mod bench;
pub mod estimators;
pub mod inference;
pub mod montecarlo;
pub mod randgen;
pub mod scalar;
pub mod summary;
pub mod theory;

use thiserror::Error;

pub use estimators::{EstimatorError, EstimatorKind, Sample, ScalarSums, SumMode};
pub use randgen::{DistributionSpec, RngState};
pub use scalar::Real;
pub use theory::TheoreticalMoments;

/// Exact rational scalar.
pub type Exact = num_rational::Ratio<i64>;

pub type Sample64 = Sample<f64>;
pub type Sample32 = Sample<f32>;
pub type ExactSample = Sample<Exact>;
pub type Moments64 = TheoreticalMoments<f64>;
pub type Moments32 = TheoreticalMoments<f32>;

/// Any error raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Theory(#[from] theory::TheoryError),
    #[error(transparent)]
    Random(#[from] randgen::RandError),
    #[error(transparent)]
    MonteCarlo(#[from] montecarlo::MonteCarloError),
    #[error(transparent)]
    Bench(#[from] bench::BenchError),
    #[error(transparent)]
    Ols(#[from] inference::OlsError),
    #[error(transparent)]
    Kde(#[from] inference::KdeError),
}

impl Error {
    /// True for failures caused by arithmetic rather than by the request.
    pub fn is_numerical(&self) -> bool {
        use montecarlo::MonteCarloError as Mc;
        matches!(
            self,
            Self::Estimator(EstimatorError::NumericalInstability { .. })
                | Self::MonteCarlo(Mc::Estimator(EstimatorError::NumericalInstability { .. }))
                | Self::Bench(bench::BenchError::Estimator(
                    EstimatorError::NumericalInstability { .. }
                ))
                | Self::Ols(inference::OlsError::RankDeficient(_))
                | Self::Kde(inference::KdeError::DegenerateData)
                | Self::Bench(bench::BenchError::Clock)
        )
    }
}
