//! Gaussian kernel density estimates with Silverman's rule-of-thumb
//! bandwidth.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::summary;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KdeError {
    #[error("need at least 2 finite values, got {0}")]
    TooFewValues(usize),
    #[error("data has zero spread")]
    DegenerateData,
}

/// `0.9 · min(sd, IQR/1.34) · n^(−1/5)`; falls back to whichever spread
/// measure is positive.
pub fn silverman_bandwidth(values: &[f64]) -> Result<f64, KdeError> {
    if values.len() < 2 || values.iter().any(|v| !v.is_finite()) {
        return Err(KdeError::TooFewValues(values.len()));
    }
    let sd = summary::variance(values, 1).sqrt();
    let sorted = summary::sorted(values);
    let iqr = summary::quantile_sorted(&sorted, 0.75) - summary::quantile_sorted(&sorted, 0.25);
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr / 1.34),
        (true, false) => sd,
        (false, true) => iqr / 1.34,
        (false, false) => return Err(KdeError::DegenerateData),
    };
    Ok(0.9 * spread * (values.len() as f64).powf(-0.2))
}

/// Density at each grid point.
pub fn kde(values: &[f64], grid: &[f64]) -> Result<Vec<f64>, KdeError> {
    let h = silverman_bandwidth(values)?;
    Ok(kde_with_bandwidth(values, grid, h))
}

pub fn kde_with_bandwidth(values: &[f64], grid: &[f64], h: f64) -> Vec<f64> {
    let norm = 1.0 / (values.len() as f64 * h * (2.0 * PI).sqrt());
    grid.iter()
        .map(|&x| {
            values
                .iter()
                .map(|&v| {
                    let z = (x - v) / h;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
                * norm
        })
        .collect()
}

pub const DEFAULT_GRID_POINTS: usize = 512;

/// Evenly spaced grid covering the data range widened by four bandwidths on
/// each side.
pub fn default_grid(values: &[f64], bandwidth: f64, points: usize) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min) - 4.0 * bandwidth;
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 4.0 * bandwidth;
    let step = (hi - lo) / (points - 1) as f64;
    (0..points).map(|i| lo + step * i as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeCurve {
    pub bandwidth: f64,
    pub x: Vec<f64>,
    pub density: Vec<f64>,
}

impl KdeCurve {
    /// Density on the default grid.
    pub fn estimate(values: &[f64]) -> Result<Self, KdeError> {
        let bandwidth = silverman_bandwidth(values)?;
        let x = default_grid(values, bandwidth, DEFAULT_GRID_POINTS);
        let density = kde_with_bandwidth(values, &x, bandwidth);
        Ok(Self {
            bandwidth,
            x,
            density,
        })
    }

    /// Trapezoidal integral of the density over the grid.
    pub fn integral(&self) -> f64 {
        self.x
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(x, d)| 0.5 * (x[1] - x[0]) * (d[0] + d[1]))
            .sum()
    }
}
