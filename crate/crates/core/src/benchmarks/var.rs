//! Vector autoregression fitted by least squares.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{FtsError, Result};

/// `y_t = c + Σ_{l=1..p} A_l y_{t-l} + e_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarModel {
    pub order: usize,
    pub dim: usize,
    pub intercept: Vec<f64>,
    /// `coefficients[l-1]` is `A_l`, stored row-major `dim × dim`.
    pub coefficients: Vec<Vec<Vec<f64>>>,
    /// Residual covariance of the fit (diagnostic).
    pub residual_covariance: Vec<Vec<f64>>,
}

/// Least-squares fit with intercept of each row of `series` on its previous `order` rows.
///
/// Regressors are centred before solving, and the minimum-norm solution is
/// taken when they are collinear; constant series therefore give `A = 0`.
pub fn var_fit(series: &[Vec<f64>], order: usize) -> Result<VarModel> {
    if order == 0 {
        return Err(FtsError::domain("VAR order must be at least 1"));
    }
    let t = series.len();
    let dim = series.first().map(Vec::len).unwrap_or(0);
    if dim == 0 {
        return Err(FtsError::domain("VAR needs a nonempty series"));
    }
    if let Some(r) = series.iter().find(|r| r.len() != dim) {
        return Err(FtsError::LengthMismatch { left: r.len(), right: dim });
    }
    let needed = dim * order + order + 1;
    if t < needed {
        return Err(FtsError::domain(format!(
            "VAR({order}) in {dim} dimensions needs {needed} observations, got {t}"
        )));
    }

    let rows = t - order;
    let cols = dim * order;
    let mut x = DMatrix::from_fn(rows, cols, |r, c| series[r + order - 1 - c / dim][c % dim]);
    let mut y = DMatrix::from_fn(rows, dim, |r, c| series[r + order][c]);
    let x_mean: Vec<f64> = (0..cols).map(|c| x.column(c).mean()).collect();
    let y_mean: Vec<f64> = (0..dim).map(|c| y.column(c).mean()).collect();
    for (mut col, m) in x.column_iter_mut().zip(&x_mean) {
        col.add_scalar_mut(-m);
    }
    for (mut col, m) in y.column_iter_mut().zip(&y_mean) {
        col.add_scalar_mut(-m);
    }

    let svd = x.clone().svd(true, true);
    let max_sv = svd.singular_values.max();
    let beta = if max_sv <= f64::MIN_POSITIVE {
        DMatrix::zeros(cols, dim)
    } else {
        svd.solve(&y, max_sv * 1e-10)
            .map_err(|e| FtsError::numeric(format!("VAR least squares failed: {e}")))?
    };

    // beta rows l*dim..(l+1)*dim hold A_{l+1} transposed
    let coefficients: Vec<Vec<Vec<f64>>> = (0..order)
        .map(|l| (0..dim).map(|i| (0..dim).map(|j| beta[(l * dim + j, i)]).collect()).collect())
        .collect();
    let intercept: Vec<f64> = (0..dim)
        .map(|i| y_mean[i] - (0..cols).map(|c| beta[(c, i)] * x_mean[c]).sum::<f64>())
        .collect();

    let resid = &y - &x * &beta;
    let residual_cov = (resid.transpose() * &resid) / rows as f64;
    let residual_covariance = (0..dim).map(|i| (0..dim).map(|j| residual_cov[(i, j)]).collect()).collect();

    Ok(VarModel { order, dim, intercept, coefficients, residual_covariance })
}

/// One-step-ahead prediction from the most recent observations (oldest first).
pub fn var_predict(model: &VarModel, recent: &[Vec<f64>]) -> Result<Vec<f64>> {
    if recent.len() < model.order {
        return Err(FtsError::domain(format!(
            "VAR({}) prediction needs {} recent observations, got {}",
            model.order,
            model.order,
            recent.len()
        )));
    }
    let mut out = model.intercept.clone();
    for (l, a) in model.coefficients.iter().enumerate() {
        let lagged = &recent[recent.len() - 1 - l];
        if lagged.len() != model.dim {
            return Err(FtsError::LengthMismatch { left: lagged.len(), right: model.dim });
        }
        for (o, row) in out.iter_mut().zip(a) {
            *o += row.iter().zip(lagged).map(|(c, v)| c * v).sum::<f64>();
        }
    }
    Ok(out)
}
