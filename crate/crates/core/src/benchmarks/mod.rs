//! Reference predictors: historical mean, naive, seasonal naive and FPCF
//! (principal component scores forecast by a vector autoregression).

mod fpca;
mod var;

pub use fpca::{fpca, trapezoid_weights, FpcaModel};
pub use var::{var_fit, var_predict, VarModel};

use crate::error::{FtsError, Result};
use crate::focal::{CandidateSet, CurveSource, FocalMode, FocalSpec};
use crate::forecast::{Forecast, ForecastParams, MethodTag};

/// Default share of variance the retained components must explain.
pub const DEFAULT_VARIANCE_THRESHOLD: f64 = 0.80;

/// Pointwise mean of all candidate projections.
pub fn mean_predictor(candidates: &CandidateSet<'_>) -> Result<Forecast> {
    if candidates.is_empty() {
        return Err(FtsError::domain("mean predictor needs at least one candidate"));
    }
    let len = candidates.spec.projection_range.len();
    let mut point = vec![0.0; len];
    for p in &candidates.pairs {
        point.iter_mut().zip(p.projection).for_each(|(a, v)| *a += v);
    }
    let n = candidates.len() as f64;
    point.iter_mut().for_each(|a| *a /= n);
    Ok(Forecast::point_only(MethodTag::Mean, candidates.spec.projection_range, point))
}

/// Projection of the most recent candidate.
pub fn naive_predictor(candidates: &CandidateSet<'_>) -> Result<Forecast> {
    let mut fc = seasonal_naive(candidates, 1)?;
    fc.method = MethodTag::Naive;
    fc.params.season = None;
    Ok(fc)
}

/// Projection of the candidate `s` steps back (`s = 1` is the naive predictor).
pub fn seasonal_naive(candidates: &CandidateSet<'_>, season: usize) -> Result<Forecast> {
    if season == 0 {
        return Err(FtsError::domain("season length must be at least 1"));
    }
    if candidates.len() < season {
        return Err(FtsError::domain(format!(
            "seasonal naive with s = {season} needs {season} candidates, got {}",
            candidates.len()
        )));
    }
    let pair = &candidates.pairs[candidates.len() - season];
    let mut fc = Forecast::point_only(
        MethodTag::SeasonalNaive,
        candidates.spec.projection_range,
        pair.projection.to_vec(),
    );
    fc.params.season = Some(season);
    fc.weights = vec![crate::forecast::Contribution { index: pair.index, weight: 1.0 }];
    Ok(fc)
}

/// FPCF: FPCA of the history, VAR(`order`) on the retained scores,
/// reconstruction of the one-step-ahead score forecast.
pub fn fpcf_forecast<S: CurveSource + ?Sized>(
    source: &S,
    spec: &FocalSpec,
    threshold: f64,
    order: usize,
) -> Result<Forecast> {
    if spec.mode != FocalMode::OneStep {
        return Err(FtsError::domain("FPCF only supports one-step-ahead forecasting"));
    }
    let model = match fpca(source, threshold) {
        Ok(model) => model,
        // a constant history forecasts itself
        Err(FtsError::ZeroVariance) => {
            let range = source.grid().full_range();
            let point = source.segment(source.len() - 1, range).to_vec();
            let mut fc = Forecast::point_only(MethodTag::Fpcf, spec.projection_range, point);
            fc.params.components = Some(0);
            return Ok(fc);
        }
        Err(e) => return Err(e),
    };
    let var = var_fit(&model.scores, order)?;
    let next = var_predict(&var, &model.scores)?;
    let point = model.reconstruct(&next);
    Ok(Forecast {
        method: MethodTag::Fpcf,
        params: ForecastParams { components: Some(model.components), order: Some(order), ..Default::default() },
        range: spec.projection_range,
        point: Some(point),
        band: None,
        weights: Vec::new(),
    })
}
