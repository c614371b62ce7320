//! Rolling holdout evaluation of several forecasting methods.
//!
//! The last `holdout` curves are forecast one origin at a time, each from the
//! history before it. Data-driven parameters are tuned once on the curves
//! preceding the holdout. Every read goes through an audited view, so the
//! report states whether any forecast touched data at or beyond its origin.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmarks::{fpcf_forecast, mean_predictor, naive_predictor, seasonal_naive, DEFAULT_VARIANCE_THRESHOLD};
use crate::envelope::{build_envelope, Envelope};
use crate::error::{FtsError, Result};
use crate::focal::{candidate_set, Access, AccessLimit, AccessLog, CandidateSet, CurveSource, FocalMode, FocalSpec, HistoryView};
use crate::forecast::{band_forecast, ep_point, fknn_point, BandSource, Forecast, Weighting};
use crate::grid::FtsDataset;
use crate::metrics::{coverage, mape, mse, winkler};
use crate::tuning::{select_band_k, select_k, select_theta, select_var_order, visible_for, BandKind, TuningConfig};

/// Largest VAR order tried when the FPCF order is tuned.
pub const MAX_VAR_ORDER: usize = 5;

/// How EP weights its envelope members.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpWeights {
    Fixed(Weighting),
    /// Exponential weights with θ chosen on the rolling origin.
    TunedTheta,
}

/// A forecasting method with its (possibly tuned) parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum MethodSpec {
    Mean,
    Naive,
    SeasonalNaive { season: usize },
    /// `k = None` tunes `k` on the rolling origin.
    Fknn { weighting: Weighting, k: Option<usize> },
    Ep { weights: EpWeights },
    /// `order = None` tunes the VAR order over `1..=5`.
    Fpcf { threshold: f64, order: Option<usize> },
}

impl MethodSpec {
    /// Canonical string form, parseable by [`FromStr`].
    pub fn label(&self) -> String {
        self.to_string()
    }

    fn band_kind(&self) -> Option<BandKind> {
        match self {
            MethodSpec::Fknn { .. } => Some(BandKind::Nearest),
            MethodSpec::Ep { .. } => Some(BandKind::Envelope),
            _ => None,
        }
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let weighting = |w: &Weighting| match w {
            Weighting::InverseSquareDistance => "weights=inverse".to_string(),
            Weighting::Exponential { theta } => format!("theta={theta}"),
        };
        match self {
            MethodSpec::Mean => write!(f, "mean"),
            MethodSpec::Naive => write!(f, "naive"),
            MethodSpec::SeasonalNaive { season } => write!(f, "snaive:{season}"),
            MethodSpec::Fknn { weighting: w, k } => {
                write!(f, "fknn:{}", weighting(w))?;
                match k {
                    Some(k) => write!(f, ",k={k}"),
                    None => Ok(()),
                }
            }
            MethodSpec::Ep { weights: EpWeights::Fixed(w) } => write!(f, "ep:{}", weighting(w)),
            MethodSpec::Ep { weights: EpWeights::TunedTheta } => write!(f, "ep:theta=auto"),
            MethodSpec::Fpcf { threshold, order } => {
                write!(f, "fpcf:threshold={threshold},p=")?;
                match order {
                    Some(p) => write!(f, "{p}"),
                    None => write!(f, "auto"),
                }
            }
        }
    }
}

fn parse_positive<T: FromStr + PartialOrd + Default>(key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .ok()
        .filter(|v| *v > T::default())
        .ok_or_else(|| FtsError::domain(format!("{key} = {value:?} is not a positive number")))
}

impl FromStr for MethodSpec {
    type Err = FtsError;

    /// Accepts `mean`, `naive`, `snaive:S`, `fknn[:theta=T|weights=inverse][,k=K]`,
    /// `ep[:theta=T|theta=auto|weights=inverse]` and `fpcf[:threshold=X][,p=P|auto]`.
    /// Plain `fknn` uses `1/d` weights with tuned `k`; plain `ep` uses `θ = 1`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut options = Vec::new();
        for part in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            options.push(part.split_once('=').unwrap_or((part, "")));
        }
        let unknown = |key: &str| FtsError::domain(format!("unknown option {key:?} for method {name:?}"));
        match name.to_ascii_lowercase().as_str() {
            "mean" | "average" if options.is_empty() => Ok(MethodSpec::Mean),
            "naive" if options.is_empty() => Ok(MethodSpec::Naive),
            "snaive" => match options.as_slice() {
                [(season, "")] => Ok(MethodSpec::SeasonalNaive { season: parse_positive("season", season)? }),
                [("s", season)] => Ok(MethodSpec::SeasonalNaive { season: parse_positive("season", season)? }),
                [] => Err(FtsError::domain("snaive needs a season length, e.g. snaive:7")),
                _ => Err(unknown(rest)),
            },
            "fknn" => {
                let mut weighting = Weighting::InverseSquareDistance;
                let mut k = None;
                for (key, value) in options {
                    match key {
                        "theta" => weighting = Weighting::exponential(parse_positive("theta", value)?)?,
                        "weights" if value == "inverse" => weighting = Weighting::InverseSquareDistance,
                        "k" if value == "auto" => k = None,
                        "k" => k = Some(parse_positive("k", value)?),
                        _ => return Err(unknown(key)),
                    }
                }
                Ok(MethodSpec::Fknn { weighting, k })
            }
            "ep" => {
                let mut weights = EpWeights::Fixed(Weighting::Exponential { theta: 1.0 });
                for (key, value) in options {
                    match key {
                        "theta" if value == "auto" => weights = EpWeights::TunedTheta,
                        "theta" => weights = EpWeights::Fixed(Weighting::exponential(parse_positive("theta", value)?)?),
                        "weights" if value == "inverse" => weights = EpWeights::Fixed(Weighting::InverseSquareDistance),
                        _ => return Err(unknown(key)),
                    }
                }
                Ok(MethodSpec::Ep { weights })
            }
            "fpcf" => {
                let mut threshold = DEFAULT_VARIANCE_THRESHOLD;
                let mut order = Some(1);
                for (key, value) in options {
                    match key {
                        "threshold" => {
                            threshold = parse_positive("threshold", value)?;
                            if threshold > 1.0 {
                                return Err(FtsError::domain(format!("threshold = {threshold} exceeds 1")));
                            }
                        }
                        "p" if value == "auto" => order = None,
                        "p" => order = Some(parse_positive("p", value)?),
                        _ => return Err(unknown(key)),
                    }
                }
                Ok(MethodSpec::Fpcf { threshold, order })
            }
            _ => Err(FtsError::domain(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestConfig {
    pub spec: FocalSpec,
    /// Number of most recent curves forecast.
    pub holdout: usize,
    pub tuning: TuningConfig,
    /// Band level; `None` skips bands.
    pub alpha: Option<f64>,
}

/// Parameters fixed for a method before the holdout is forecast.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Resolved {
    method: MethodSpec,
    k: Option<usize>,
    theta: Option<f64>,
    band_k: Option<usize>,
    order: Option<usize>,
}

/// Scores of one method at one forecast origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRecord {
    /// Index of the forecast curve.
    pub origin: usize,
    pub method: String,
    pub mse: f64,
    /// `None` when the truth has a zero value.
    pub mape: Option<f64>,
    pub coverage: Option<f64>,
    pub winkler: Option<f64>,
    pub width: Option<f64>,
    pub forecast: Forecast,
    pub truth: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub mse: f64,
    /// MSE over the smallest MSE among the evaluated methods.
    pub mse_ratio: f64,
    pub mape: Option<f64>,
    pub coverage: Option<f64>,
    pub winkler: Option<f64>,
    pub width: Option<f64>,
    pub k: Option<usize>,
    pub theta: Option<f64>,
    pub band_k: Option<usize>,
    pub order: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditViolation {
    pub origin: usize,
    pub index: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub accesses: usize,
    pub violations: Vec<AuditViolation>,
}

impl AuditReport {
    fn absorb(&mut self, origin: usize, log: &AccessLog) {
        self.accesses += log.accesses();
        self.violations.extend(log.violations().into_iter().map(|a: Access| AuditViolation {
            origin,
            index: a.index,
            start: a.range.start,
            end: a.range.end,
        }));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    /// Ordered by origin, then by method as requested.
    pub records: Vec<ForecastRecord>,
    pub summaries: Vec<MethodSummary>,
    pub audit: AuditReport,
}

/// Reads permitted when forecasting curve `origin`.
fn origin_limit(spec: &FocalSpec, origin: usize) -> AccessLimit {
    match spec.mode {
        FocalMode::Updating { .. } => AccessLimit { full: origin, partial: Some(spec.focal_range) },
        _ => AccessLimit { full: origin, partial: None },
    }
}

fn resolve(
    method: MethodSpec,
    training: &dyn CurveSource,
    config: &BacktestConfig,
) -> Result<Resolved> {
    let spec = &config.spec;
    let mut r = Resolved { method, k: None, theta: None, band_k: None, order: None };
    match method {
        MethodSpec::Fknn { weighting, k } => {
            r.k = match k {
                Some(k) => Some(k),
                None => Some(select_k(training, spec, weighting, &config.tuning)?.best),
            };
        }
        MethodSpec::Ep { weights: EpWeights::TunedTheta } => {
            r.theta = Some(select_theta(training, spec, &config.tuning)?.best);
        }
        MethodSpec::Fpcf { threshold, order } => {
            if spec.mode != FocalMode::OneStep {
                return Err(FtsError::domain("FPCF only supports one-step-ahead forecasting"));
            }
            r.order = match order {
                Some(p) => Some(p),
                None => Some(select_var_order(training, threshold, MAX_VAR_ORDER, config.tuning.folds)?.best),
            };
        }
        _ => {}
    }
    if let (Some(alpha), Some(kind)) = (config.alpha, method.band_kind()) {
        r.band_k = Some(select_band_k(training, spec, kind, alpha, &config.tuning)?.best);
    }
    Ok(r)
}

fn forecast_one(
    r: &Resolved,
    view: &HistoryView<'_>,
    cset: &CandidateSet<'_>,
    envelope: &mut Option<Envelope>,
    spec: &FocalSpec,
) -> Result<Forecast> {
    let mut envelope_ref = |cset: &CandidateSet<'_>| -> Result<Envelope> {
        if envelope.is_none() {
            *envelope = Some(build_envelope(cset)?);
        }
        Ok(envelope.clone().expect("envelope built"))
    };
    let point = match r.method {
        MethodSpec::Mean => mean_predictor(cset)?,
        MethodSpec::Naive => naive_predictor(cset)?,
        MethodSpec::SeasonalNaive { season } => seasonal_naive(cset, season)?,
        MethodSpec::Fknn { weighting, .. } => fknn_point(cset, r.k.expect("resolved k"), weighting)?,
        MethodSpec::Ep { weights } => {
            let weighting = match weights {
                EpWeights::Fixed(w) => w,
                EpWeights::TunedTheta => Weighting::Exponential { theta: r.theta.expect("resolved theta") },
            };
            ep_point(&envelope_ref(cset)?, cset, weighting)?
        }
        MethodSpec::Fpcf { threshold, .. } => fpcf_forecast(view, spec, threshold, r.order.expect("resolved order"))?,
    };
    let Some(band_k) = r.band_k else { return Ok(point) };
    let band = match r.method.band_kind() {
        Some(BandKind::Envelope) => {
            let env = envelope_ref(cset)?;
            let k = band_k.min(env.len());
            band_forecast(cset, BandSource::Envelope(&env, k))?
        }
        Some(BandKind::Nearest) => band_forecast(cset, BandSource::Nearest(band_k.min(cset.len())))?,
        None => return Ok(point),
    };
    Ok(point.with_band_from(band))
}

fn score(origin: usize, r: &Resolved, forecast: Forecast, truth: &[f64], alpha: Option<f64>) -> Result<ForecastRecord> {
    let point = forecast.point.as_deref().expect("point forecast");
    let (cov, wink, width) = match (&forecast.band, alpha) {
        (Some(band), Some(alpha)) => {
            (Some(coverage(band, truth)?), Some(winkler(band, truth, alpha)?), Some(band.mean_width()))
        }
        _ => (None, None, None),
    };
    Ok(ForecastRecord {
        origin,
        method: r.method.label(),
        mse: mse(point, truth)?,
        mape: mape(point, truth).ok(),
        coverage: cov,
        winkler: wink,
        width,
        truth: truth.to_vec(),
        forecast,
    })
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Option<Vec<f64>> = values.collect();
    v.filter(|v| !v.is_empty()).map(|v| v.iter().sum::<f64>() / v.len() as f64)
}

/// Forecast each of the last `config.holdout` curves with every method.
pub fn backtest(dataset: &FtsDataset, methods: &[MethodSpec], config: &BacktestConfig) -> Result<BacktestReport> {
    if methods.is_empty() {
        return Err(FtsError::domain("no methods to evaluate"));
    }
    let n = dataset.len();
    let spec = &config.spec;
    if config.holdout == 0 || config.holdout >= n {
        return Err(FtsError::domain(format!("holdout of {} from {n} curves", config.holdout)));
    }
    let first_origin = n - config.holdout;
    let first_visible = visible_for(spec, first_origin).unwrap_or(0);
    if first_visible < spec.min_curves() {
        return Err(FtsError::TooFewCurves { needed: spec.min_curves(), got: first_visible });
    }

    // tuning sees only the curves before the first origin
    let training_log = AccessLog::new(AccessLimit { full: first_origin, partial: None });
    let training_view = HistoryView::new(dataset, first_origin)?.with_log(&training_log);
    let resolved: Vec<Resolved> = methods
        .iter()
        .map(|&m| resolve(m, &training_view, config))
        .collect::<Result<_>>()?;

    let per_origin: Vec<(Vec<ForecastRecord>, AccessLog)> = (first_origin..n)
        .into_par_iter()
        .map(|origin| {
            let visible = visible_for(spec, origin).expect("admissible origin");
            let log = AccessLog::new(origin_limit(spec, origin));
            let records = {
                let view = HistoryView::new(dataset, visible)?.with_log(&log);
                let cset = candidate_set(&view, spec)?;
                let mut envelope = None;
                // the truth is read outside the audited view
                let truth = dataset.segment(origin, spec.projection_range);
                resolved
                    .iter()
                    .map(|r| {
                        let fc = forecast_one(r, &view, &cset, &mut envelope, spec)?;
                        score(origin, r, fc, truth, config.alpha)
                    })
                    .collect::<Result<Vec<_>>>()?
            };
            Ok((records, log))
        })
        .collect::<Result<_>>()?;

    let mut audit = AuditReport::default();
    audit.absorb(first_origin, &training_log);
    let mut records = Vec::with_capacity(config.holdout * methods.len());
    for (offset, (recs, log)) in per_origin.into_iter().enumerate() {
        audit.absorb(first_origin + offset, &log);
        records.extend(recs);
    }

    let mut summaries: Vec<MethodSummary> = resolved
        .iter()
        .enumerate()
        .map(|(j, r)| {
            let mine = || records.iter().skip(j).step_by(methods.len());
            MethodSummary {
                method: r.method.label(),
                mse: mine().map(|x| x.mse).sum::<f64>() / config.holdout as f64,
                mse_ratio: f64::NAN,
                mape: mean_of(mine().map(|x| x.mape)),
                coverage: mean_of(mine().map(|x| x.coverage)),
                winkler: mean_of(mine().map(|x| x.winkler)),
                width: mean_of(mine().map(|x| x.width)),
                k: r.k,
                theta: r.theta,
                band_k: r.band_k,
                order: r.order,
            }
        })
        .collect();
    let best = summaries.iter().map(|s| s.mse).fold(f64::INFINITY, f64::min);
    for s in &mut summaries {
        s.mse_ratio = if best > 0.0 { s.mse / best } else if s.mse == 0.0 { 1.0 } else { f64::INFINITY };
    }
    Ok(BacktestReport { records, summaries, audit })
}

/// Forecast the curve after the last one in `dataset`, tuning on all of it.
///
/// In updating mode the last curve is the partially observed one and only its
/// focal segment is read. The returned parameters record what was tuned.
pub fn forecast_next(dataset: &FtsDataset, method: MethodSpec, config: &BacktestConfig) -> Result<Forecast> {
    let spec = &config.spec;
    let r = resolve(method, dataset, config)?;
    let view = HistoryView::new(dataset, dataset.len())?;
    let cset = candidate_set(&view, spec)?;
    let mut fc = forecast_one(&r, &view, &cset, &mut None, spec)?;
    fc.params.k = fc.params.k.or(r.k);
    fc.params.theta = fc.params.theta.or(r.theta);
    fc.params.order = fc.params.order.or(r.order);
    Ok(fc)
}
