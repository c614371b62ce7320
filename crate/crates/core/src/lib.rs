//! Nonparametric forecasting of functional time series.
//!
//! Curves are sampled on a shared uniform grid over `[0, 1]`. Forecasts are
//! weighted means of the continuations of past curves that resemble the most
//! recent one: either its `k` nearest neighbours in L2 (fKNN) or an envelope
//! of past curves chosen to surround it in shape and magnitude (EP). Bands
//! come from the pointwise range of the deepest envelope members under the
//! modified band depth.

pub mod backtest;
pub mod benchmarks;
pub mod depth;
pub mod envelope;
pub mod error;
pub mod focal;
pub mod forecast;
pub mod grid;
pub mod metrics;
pub mod sim;
pub mod tuning;

pub use backtest::{backtest, forecast_next, BacktestConfig, BacktestReport, EpWeights, MethodSpec};
pub use depth::{band_counts, deepest_k, mbd, mbd_all_fast, BandCount, DepthRecord};
pub use envelope::{build_envelope, envelope_band, Band, Envelope};
pub use error::{FtsError, Result};
pub use focal::{candidate_set, CandidateSet, CurveSource, FocalMode, FocalSpec, HistoryView};
pub use forecast::{band_forecast, ep_point, fknn_point, BandSource, Forecast, MethodTag, Weighting};
pub use grid::{l2_sq_distance, Curve, FtsDataset, Grid, IndexRange};
pub use sim::{generate_fts, ShockModelParams, SimTrace};
pub use tuning::{BandKind, TuningConfig, TuningResult};
