//! Hyperparameter selection on a rolling forecasting origin.
//!
//! The `folds` most recent admissible curves of a training source act as
//! pseudo-test targets. Each fold sees only the history before its target
//! (plus, in dynamic updating, the target's observed part), produces a
//! forecast, and is scored against the target. Scores are averaged per
//! parameter and the minimiser is returned; ties go to the smaller parameter.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmarks::fpcf_forecast;
use crate::envelope::build_envelope;
use crate::error::{FtsError, Result};
use crate::focal::{candidate_set, CandidateSet, CurveSource, FocalMode, FocalSpec, HistoryView};
use crate::forecast::{band_from_indices, envelope_depth_order, ep_point, fknn_from_order, Forecast, MethodTag, Weighting};
use crate::metrics::{mse, winkler};

pub const DEFAULT_FOLDS: usize = 20;
pub const DEFAULT_MAX_K: usize = 50;
pub const DEFAULT_THETA_GRID: [f64; 7] = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0];
pub const DEFAULT_ALPHA: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningConfig {
    pub folds: usize,
    /// `None` means `1..=min(50, smallest fold candidate count)`.
    pub k_grid: Option<Vec<usize>>,
    pub theta_grid: Vec<f64>,
    pub alpha: f64,
}

impl Default for TuningConfig {
    fn default() -> Self {
        TuningConfig {
            folds: DEFAULT_FOLDS,
            k_grid: None,
            theta_grid: DEFAULT_THETA_GRID.to_vec(),
            alpha: DEFAULT_ALPHA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningResult<P> {
    pub best: P,
    /// Mean score per parameter, in increasing parameter order.
    pub score_table: Vec<(P, f64)>,
}

fn argmin<P: Copy>(table: Vec<(P, f64)>) -> Result<TuningResult<P>> {
    let mut best: Option<(P, f64)> = None;
    for &(p, s) in &table {
        if s.is_nan() {
            return Err(FtsError::numeric("NaN tuning score"));
        }
        if best.is_none_or(|(_, b)| s < b) {
            best = Some((p, s));
        }
    }
    let (best, _) = best.ok_or_else(|| FtsError::domain("empty parameter grid"))?;
    Ok(TuningResult { best, score_table: table })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Score {
    Mse,
    Winkler { alpha_permille: u32 },
}

impl Score {
    pub fn winkler(alpha: f64) -> Self {
        Score::Winkler { alpha_permille: (alpha * 1000.0).round() as u32 }
    }

    fn evaluate(&self, forecast: &Forecast, truth: &[f64]) -> Result<f64> {
        match self {
            Score::Mse => {
                let point = forecast.point.as_ref().ok_or_else(|| FtsError::domain("forecast has no point"))?;
                mse(point, truth)
            }
            Score::Winkler { alpha_permille } => {
                let band = forecast.band.as_ref().ok_or_else(|| FtsError::domain("forecast has no band"))?;
                winkler(band, truth, *alpha_permille as f64 / 1000.0)
            }
        }
    }
}

/// Band construction used when scoring band widths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandKind {
    /// `k` deepest envelope members.
    Envelope,
    /// `k` nearest candidates.
    Nearest,
}

/// One pseudo-test origin: forecast curve `target` from the first `visible` curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fold {
    pub target: usize,
    pub visible: usize,
}

/// Number of curves visible when forecasting curve `target`.
pub fn visible_for(spec: &FocalSpec, target: usize) -> Option<usize> {
    match spec.mode {
        FocalMode::OneStep => Some(target),
        FocalMode::Ahead { h } => (target + 1).checked_sub(h),
        FocalMode::Updating { .. } => Some(target + 1),
    }
}

/// The `folds` most recent origins of a source with `n` curves.
pub fn plan_folds(n: usize, spec: &FocalSpec, folds: usize) -> Result<Vec<Fold>> {
    if folds == 0 {
        return Err(FtsError::domain("at least one fold is required"));
    }
    if folds >= n {
        return Err(FtsError::domain(format!("{folds} folds from {n} curves")));
    }
    let plan: Vec<Fold> = (n - folds..n)
        .map(|target| Fold { target, visible: visible_for(spec, target).unwrap_or(0) })
        .collect();
    let first = plan[0];
    if first.visible < spec.min_curves() || spec.candidate_count(first.visible) < 2 {
        return Err(FtsError::domain(format!(
            "insufficient history: fold for curve {} sees {} curves",
            first.target, first.visible
        )));
    }
    Ok(plan)
}

/// Run `eval` on every fold in parallel, keeping fold order.
fn map_folds<T, F>(source: &dyn CurveSource, spec: &FocalSpec, folds: usize, eval: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&CandidateSet<'_>, &[f64]) -> Result<T> + Sync,
{
    let plan = plan_folds(source.len(), spec, folds)?;
    plan.par_iter()
        .map(|fold| {
            let view = HistoryView::new(source, fold.visible)?;
            let cset = candidate_set(&view, spec)?;
            let truth = source.segment(fold.target, spec.projection_range);
            eval(&cset, truth)
        })
        .collect()
}

fn mean_columns<P: Copy>(params: &[P], per_fold: Vec<Vec<f64>>) -> Vec<(P, f64)> {
    let n = per_fold.len() as f64;
    params
        .iter()
        .enumerate()
        .map(|(j, &p)| (p, per_fold.iter().map(|row| row[j]).sum::<f64>() / n))
        .collect()
}

/// Mean score of `method` over the rolling origins.
///
/// `method` receives the fold's history view and must only read through it.
pub fn rolling_origin_eval<F>(
    source: &dyn CurveSource,
    spec: &FocalSpec,
    folds: usize,
    method: F,
    score: Score,
) -> Result<f64>
where
    F: Fn(&dyn CurveSource) -> Result<Forecast> + Sync,
{
    let plan = plan_folds(source.len(), spec, folds)?;
    let scores: Vec<f64> = plan
        .par_iter()
        .map(|fold| {
            let view = HistoryView::new(source, fold.visible)?;
            let forecast = method(&view)?;
            score.evaluate(&forecast, source.segment(fold.target, spec.projection_range))
        })
        .collect::<Result<_>>()?;
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

fn k_grid(source: &dyn CurveSource, spec: &FocalSpec, config: &TuningConfig) -> Result<Vec<usize>> {
    let plan = plan_folds(source.len(), spec, config.folds)?;
    let available = spec.candidate_count(plan[0].visible);
    let mut grid = match &config.k_grid {
        Some(g) => g.clone(),
        None => (1..=available.min(DEFAULT_MAX_K)).collect(),
    };
    grid.sort_unstable();
    grid.dedup();
    if grid.is_empty() || grid[0] == 0 {
        return Err(FtsError::domain("k grid must be nonempty and positive"));
    }
    Ok(grid)
}

fn theta_grid(config: &TuningConfig) -> Result<Vec<f64>> {
    let mut grid = config.theta_grid.clone();
    if grid.is_empty() || grid.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(FtsError::domain("theta grid must be nonempty and positive"));
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(grid)
}

/// `k*` for the fKNN point forecast with the given weighting.
pub fn select_k(
    source: &dyn CurveSource,
    spec: &FocalSpec,
    weighting: Weighting,
    config: &TuningConfig,
) -> Result<TuningResult<usize>> {
    let grid = k_grid(source, spec, config)?;
    let per_fold = map_folds(source, spec, config.folds, |cset, truth| {
        let order = cset.nearest_order();
        grid.iter()
            .map(|&k| {
                let fc = fknn_from_order(cset, &order, k, weighting)?;
                mse(fc.point.as_deref().expect("point forecast"), truth)
            })
            .collect()
    })?;
    argmin(mean_columns(&grid, per_fold))
}

/// `θ*` for the EP point forecast with exponential weights.
pub fn select_theta(source: &dyn CurveSource, spec: &FocalSpec, config: &TuningConfig) -> Result<TuningResult<f64>> {
    let grid = theta_grid(config)?;
    let per_fold = map_folds(source, spec, config.folds, |cset, truth| {
        let envelope = build_envelope(cset)?;
        grid.iter()
            .map(|&theta| {
                let fc = ep_point(&envelope, cset, Weighting::Exponential { theta })?;
                mse(fc.point.as_deref().expect("point forecast"), truth)
            })
            .collect()
    })?;
    argmin(mean_columns(&grid, per_fold))
}

/// Band size `k` minimising the mean Winkler score at level `alpha`.
///
/// For envelope bands a fold whose envelope is smaller than `k` uses all of it.
pub fn select_band_k(
    source: &dyn CurveSource,
    spec: &FocalSpec,
    kind: BandKind,
    alpha: f64,
    config: &TuningConfig,
) -> Result<TuningResult<usize>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(FtsError::domain(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    let grid = k_grid(source, spec, config)?;
    let per_fold = map_folds(source, spec, config.folds, |cset, truth| {
        let (order, method) = ranked_for_band(cset, kind)?;
        grid.iter()
            .map(|&k| {
                let k = match kind {
                    BandKind::Envelope => k.min(order.len()),
                    BandKind::Nearest if k > order.len() => {
                        return Err(FtsError::domain(format!("k = {k} exceeds {} candidates", order.len())))
                    }
                    BandKind::Nearest => k,
                };
                let fc = band_from_indices(cset, method, &order[..k]);
                winkler(fc.band.as_ref().expect("band forecast"), truth, alpha)
            })
            .collect()
    })?;
    argmin(mean_columns(&grid, per_fold))
}

/// Candidate indices in band-inclusion order for `kind`.
pub(crate) fn ranked_for_band(cset: &CandidateSet<'_>, kind: BandKind) -> Result<(Vec<usize>, MethodTag)> {
    Ok(match kind {
        BandKind::Envelope => {
            let envelope = build_envelope(cset)?;
            (envelope_depth_order(&envelope, cset)?, MethodTag::Ep)
        }
        BandKind::Nearest => {
            let order = cset.nearest_order().into_iter().map(|p| cset.pairs[p].index).collect();
            (order, MethodTag::Fknn)
        }
    })
}

/// VAR order for FPCF minimising rolling one-step MSE over `1..=max_order`.
///
/// Orders the history is too short for are skipped.
pub fn select_var_order(
    source: &dyn CurveSource,
    threshold: f64,
    max_order: usize,
    folds: usize,
) -> Result<TuningResult<usize>> {
    let spec = FocalSpec::one_step(source.grid());
    let table: Vec<(usize, f64)> = (1..=max_order)
        .filter_map(|p| {
            rolling_origin_eval(source, &spec, folds, |view| fpcf_forecast(view, &spec, threshold, p), Score::Mse)
                .ok()
                .map(|s| (p, s))
        })
        .collect();
    argmin(table)
}
