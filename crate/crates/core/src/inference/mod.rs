//! Supporting statistics: fixed-effects OLS, Student-t tails and kernel
//! density estimates.

pub mod kde;
pub mod ols;
pub mod tdist;

pub use kde::{default_grid, kde, silverman_bandwidth, KdeCurve, KdeError};
pub use ols::{ols_fit, DesignMatrix, OlsError, RegressionFit};
pub use tdist::{beta_reg, t_cdf, t_quantile, t_tail};
