//! Ordinary least squares with categorical fixed effects.
//!
//! The fit uses a Householder QR decomposition of the design matrix rather
//! than forming `XᵀX`; standard errors are the classical homoskedastic ones.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bench::BenchmarkRecord;
use crate::estimators::EstimatorKind;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OlsError {
    #[error("design is rank deficient at column `{0}`")]
    RankDeficient(String),
    #[error("need more observations ({obs}) than columns ({cols})")]
    InsufficientObservations { obs: usize, cols: usize },
    #[error("malformed design: {0}")]
    Malformed(String),
}

/// Row-major regressor matrix with named columns and a response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    pub columns: Vec<String>,
    rows: Vec<Vec<f64>>,
    pub response: Vec<f64>,
}

impl DesignMatrix {
    pub fn new(
        columns: Vec<String>,
        rows: Vec<Vec<f64>>,
        response: Vec<f64>,
    ) -> Result<Self, OlsError> {
        if rows.len() != response.len() {
            return Err(OlsError::Malformed(format!(
                "{} rows but {} responses",
                rows.len(),
                response.len()
            )));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != columns.len()) {
            return Err(OlsError::Malformed(format!(
                "row {i} has {} entries, expected {}",
                rows[i].len(),
                columns.len()
            )));
        }
        Ok(Self {
            columns,
            rows,
            response,
        })
    }

    /// Intercept plus dummies for estimator kind and sample size, regressing
    /// `elapsed_ns`. The first estimator in canonical order and the smallest
    /// sample size are the omitted reference levels.
    pub fn fixed_effects(records: &[BenchmarkRecord]) -> Result<Self, OlsError> {
        let mut kinds: Vec<EstimatorKind> = Vec::new();
        for r in records {
            if !kinds.contains(&r.estimator) {
                kinds.push(r.estimator);
            }
        }
        kinds.sort_by(|a, b| {
            a.canonical_rank().cmp(&b.canonical_rank()).then_with(|| {
                let key = |k: &EstimatorKind| match k {
                    EstimatorKind::Generalized(a) => *a,
                    _ => 0.0,
                };
                key(a).total_cmp(&key(b))
            })
        });
        let sizes: Vec<usize> = records
            .iter()
            .map(|r| r.n)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();

        let mut columns = vec!["intercept".to_owned()];
        columns.extend(kinds.iter().skip(1).map(|k| format!("estimator:{k}")));
        columns.extend(sizes.iter().skip(1).map(|n| format!("n:{n}")));

        let rows = records
            .iter()
            .map(|r| {
                let mut row = Vec::with_capacity(columns.len());
                row.push(1.0);
                row.extend(
                    kinds
                        .iter()
                        .skip(1)
                        .map(|k| f64::from(u8::from(*k == r.estimator))),
                );
                row.extend(sizes.iter().skip(1).map(|&n| f64::from(u8::from(n == r.n))));
                row
            })
            .collect();
        let response = records.iter().map(|r| r.elapsed_ns as f64).collect();
        Self::new(columns, rows, response)
    }

    pub fn n_obs(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub terms: Vec<String>,
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub r_squared: f64,
    pub n_obs: usize,
    pub residual_sum_sq: f64,
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

impl RegressionFit {
    pub fn coefficient(&self, term: &str) -> Option<f64> {
        self.terms
            .iter()
            .position(|t| t == term)
            .map(|i| self.coefficients[i])
    }
}

/// Relative threshold on `|R_kk|` below which a column counts as dependent.
const RANK_TOL: f64 = 1e-10;

pub fn ols_fit(design: &DesignMatrix) -> Result<RegressionFit, OlsError> {
    let m = design.n_obs();
    let p = design.n_cols();
    if m <= p {
        return Err(OlsError::InsufficientObservations { obs: m, cols: p });
    }
    // column-major working copy
    let mut a: Vec<Vec<f64>> = (0..p)
        .map(|j| design.rows.iter().map(|r| r[j]).collect())
        .collect();
    let mut qty = design.response.clone();
    let col_scale = a
        .iter()
        .map(|c| norm(c))
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);

    let mut r_diag = vec![0.0; p];
    for k in 0..p {
        let alpha = norm(&a[k][k..]);
        if alpha <= RANK_TOL * col_scale {
            return Err(OlsError::RankDeficient(design.columns[k].clone()));
        }
        let alpha = if a[k][k] > 0.0 { -alpha } else { alpha };
        // v = x − alpha·e1, stored in place of column k's tail
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        r_diag[k] = alpha;
        for col in a.iter_mut().skip(k + 1) {
            reflect(&v, vnorm2, &mut col[k..]);
        }
        reflect(&v, vnorm2, &mut qty[k..]);
        a[k][k] = alpha;
        for x in a[k][k + 1..].iter_mut() {
            *x = 0.0;
        }
    }

    // back substitution R·β = Qᵀy
    let mut beta = vec![0.0; p];
    for i in (0..p).rev() {
        let mut s = qty[i];
        for j in i + 1..p {
            s -= a[j][i] * beta[j];
        }
        beta[i] = s / r_diag[i];
    }

    let residuals: Vec<f64> = design
        .rows
        .iter()
        .zip(&design.response)
        .map(|(row, y)| y - row.iter().zip(&beta).map(|(x, b)| x * b).sum::<f64>())
        .collect();
    let ssr: f64 = residuals.iter().map(|e| e * e).sum();
    let y_mean = design.response.iter().sum::<f64>() / m as f64;
    let sst: f64 = design.response.iter().map(|y| (y - y_mean).powi(2)).sum();
    let r_squared = if sst > 0.0 {
        (1.0 - ssr / sst).clamp(0.0, 1.0)
    } else {
        0.0
    };

    // SE_i = σ·‖row i of R⁻¹‖
    let sigma2 = ssr / (m - p) as f64;
    let r_inv = upper_inverse(&a, &r_diag);
    let standard_errors = (0..p)
        .map(|i| (sigma2 * (i..p).map(|j| r_inv[i][j].powi(2)).sum::<f64>()).sqrt())
        .collect();

    Ok(RegressionFit {
        terms: design.columns.clone(),
        coefficients: beta,
        standard_errors,
        r_squared,
        n_obs: m,
        residual_sum_sq: ssr,
        residuals,
    })
}

fn norm(x: &[f64]) -> f64 {
    let scale = x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * x.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt()
}

/// Applies `I − 2vvᵀ/‖v‖²` to `x`.
fn reflect(v: &[f64], vnorm2: f64, x: &mut [f64]) {
    if vnorm2 == 0.0 {
        return;
    }
    let dot: f64 = v.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
    let f = 2.0 * dot / vnorm2;
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= f * vi;
    }
}

/// Inverse of the upper-triangular R stored column-major in `a` (`a[j][i]`
/// is `R[i][j]`), returned row-major.
fn upper_inverse(a: &[Vec<f64>], diag: &[f64]) -> Vec<Vec<f64>> {
    let p = diag.len();
    let mut inv = vec![vec![0.0; p]; p];
    for col in 0..p {
        // solve R·x = e_col
        for i in (0..=col).rev() {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for j in i + 1..=col {
                s -= a[j][i] * inv[j][col];
            }
            inv[i][col] = s / diag[i];
        }
    }
    inv
}
