//! Functional principal components on the evaluation grid.
//!
//! The covariance operator is discretised with trapezoid weights `W`, and the
//! symmetric matrix `W^{1/2} C W^{1/2}` is diagonalised. Eigenfunctions are
//! `W^{-1/2} v`, which makes them orthonormal under the same quadrature.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{FtsError, Result};
use crate::focal::CurveSource;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpcaModel {
    pub mean: Vec<f64>,
    /// All eigenfunctions, in order of decreasing eigenvalue.
    pub eigenfunctions: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    /// Scores of the fitted curves on the first `components` eigenfunctions.
    pub scores: Vec<Vec<f64>>,
    pub components: usize,
    /// Cumulative explained-variance fractions over all components.
    pub explained_variance: Vec<f64>,
    weights: Vec<f64>,
}

/// Trapezoid quadrature weights on a uniform grid.
pub fn trapezoid_weights(m: usize, spacing: f64) -> Vec<f64> {
    let mut w = vec![spacing; m];
    w[0] = spacing / 2.0;
    w[m - 1] = spacing / 2.0;
    w
}

impl FpcaModel {
    /// Fit on `rows` (equal length, grid spacing `spacing`) keeping the
    /// smallest number of components explaining at least `threshold` of the variance.
    pub fn fit(rows: &[&[f64]], spacing: f64, threshold: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(FtsError::domain(format!("variance threshold {threshold} outside (0, 1]")));
        }
        let n = rows.len();
        if n < 2 {
            return Err(FtsError::TooFewCurves { needed: 2, got: n });
        }
        let m = rows[0].len();
        if let Some(r) = rows.iter().find(|r| r.len() != m) {
            return Err(FtsError::LengthMismatch { left: r.len(), right: m });
        }
        let weights = trapezoid_weights(m, spacing);
        let sqrt_w: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();

        let mut mean = vec![0.0; m];
        for r in rows {
            mean.iter_mut().zip(r.iter()).for_each(|(a, v)| *a += v);
        }
        mean.iter_mut().for_each(|a| *a /= n as f64);

        // rows of W^{1/2}(y_i - mean)
        let centred = DMatrix::from_fn(n, m, |i, j| (rows[i][j] - mean[j]) * sqrt_w[j]);
        let cov = (centred.transpose() * &centred) / n as f64;
        let eig = SymmetricEigen::new(cov);

        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k].max(0.0)).collect();
        let total: f64 = eigenvalues.iter().sum();
        let scale: f64 = 1.0 + mean.iter().zip(&weights).map(|(v, w)| v * v * w).sum::<f64>();
        if total <= 1e-24 * scale {
            return Err(FtsError::ZeroVariance);
        }

        let eigenfunctions: Vec<Vec<f64>> = order
            .iter()
            .map(|&k| (0..m).map(|j| eig.eigenvectors[(j, k)] / sqrt_w[j]).collect())
            .collect();

        let mut running = 0.0;
        let explained_variance: Vec<f64> = eigenvalues
            .iter()
            .map(|v| {
                running += v;
                running / total
            })
            .collect();
        let components = explained_variance
            .iter()
            .position(|&c| c >= threshold - 1e-12)
            .map(|p| p + 1)
            .unwrap_or(m);

        let mut model = FpcaModel {
            mean,
            eigenfunctions,
            eigenvalues,
            scores: Vec::new(),
            components,
            explained_variance,
            weights,
        };
        model.scores = rows.iter().map(|r| model.project(r, components)).collect();
        Ok(model)
    }

    /// Scores of `curve` on the first `count` eigenfunctions.
    pub fn project(&self, curve: &[f64], count: usize) -> Vec<f64> {
        self.eigenfunctions[..count]
            .iter()
            .map(|phi| {
                curve
                    .iter()
                    .zip(&self.mean)
                    .zip(phi.iter().zip(&self.weights))
                    .map(|((y, mu), (p, w))| (y - mu) * p * w)
                    .sum()
            })
            .collect()
    }

    /// `mean + Σ_j scores_j φ_j` using as many eigenfunctions as there are scores.
    pub fn reconstruct(&self, scores: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (s, phi) in scores.iter().zip(&self.eigenfunctions) {
            out.iter_mut().zip(phi).for_each(|(o, p)| *o += s * p);
        }
        out
    }

    /// Quadrature inner product on the fitted grid.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).zip(&self.weights).map(|((x, y), w)| x * y * w).sum()
    }
}

/// FPCA of every curve in `source`.
pub fn fpca<S: CurveSource + ?Sized>(source: &S, threshold: f64) -> Result<FpcaModel> {
    let range = source.grid().full_range();
    let rows: Vec<&[f64]> = (0..source.len()).map(|i| source.segment(i, range)).collect();
    FpcaModel::fit(&rows, source.grid().spacing(), threshold)
}
