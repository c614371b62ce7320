//! Front end for `fts-projection`: reads and writes datasets, resolves
//! layered settings and runs the `ftsproj` subcommands.

pub mod config;
pub mod csvio;

use std::fmt;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fts_projection::backtest::{ForecastRecord, MethodSummary};
use fts_projection::forecast::{Contribution, ForecastParams};
use fts_projection::tuning::{
    select_band_k, select_k, select_theta, select_var_order, BandKind, TuningResult, DEFAULT_ALPHA, DEFAULT_FOLDS,
};
use fts_projection::{
    backtest, forecast_next, generate_fts, BacktestConfig, FocalMode, FocalSpec, Forecast, FtsDataset, FtsError,
    IndexRange, MethodSpec, ShockModelParams, TuningConfig, Weighting,
};
use serde::Serialize;

use config::{output_path, pick, resolve_seed, FileConfig};
use csvio::{load_csv, write_output, HeaderMode, ParseError, PlotPoint};

/// A malformed command line or config file (exit status 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

/// Exit status for a failed run: 1 usage, 2 data, 3 numeric failure.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return EXIT_USAGE;
        }
        if let Some(e) = cause.downcast_ref::<FtsError>() {
            return if e.is_numeric() { EXIT_NUMERIC } else { EXIT_DATA };
        }
        if cause.is::<ParseError>() {
            return EXIT_DATA;
        }
    }
    EXIT_DATA
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Parser)]
#[command(name = "ftsproj", version, about = "Forecast functional time series from past curves that resemble the latest one")]
pub struct Cli {
    /// TOML file with default values for any flag (flags take precedence).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a shock-contaminated functional time series.
    Simulate(SimulateArgs),
    /// Forecast the next curve (or the curve h steps ahead).
    Forecast(ForecastArgs),
    /// Complete the partially observed last curve beyond grid point q.
    Update(UpdateArgs),
    /// Select one tuning parameter on a rolling origin.
    Tune(TuneArgs),
    /// Backtest several methods over the last curves of a dataset.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Expected share of periods touched by shocks [default: 0.2].
    #[arg(long)]
    pub mu: Option<f64>,
    /// Number of curves [default: 300].
    #[arg(long)]
    pub periods: Option<usize>,
    /// Grid intervals per period; curves have ppp + 1 points [default: 48].
    #[arg(long)]
    pub ppp: Option<usize>,
    /// Random seed [default: $FTSPROJ_SEED, else 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dataset CSV [default: stdout].
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// JSON file for the latent components of the simulation.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Long-format CSV (t, value, series) of the simulated path and its components.
    #[arg(long, value_name = "FILE")]
    pub emit_plot_data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Wide CSV dataset, one curve per row.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Whether the first row holds grid points [default: auto].
    #[arg(long, value_enum)]
    pub header: Option<HeaderMode>,
}

#[derive(Debug, Args)]
pub struct MethodArgs {
    /// mean, naive, snaive:S, fknn[:...], ep[:...] or fpcf[:...] [default: ep].
    #[arg(long, short)]
    pub method: Option<String>,
    /// Number of neighbours for fknn (tuned when absent).
    #[arg(long)]
    pub k: Option<usize>,
    /// Exponential weight parameter for fknn or ep, or `auto` for ep.
    #[arg(long)]
    pub theta: Option<String>,
    /// Season length for snaive.
    #[arg(long)]
    pub season: Option<usize>,
    /// Explained-variance threshold for fpcf.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// VAR order for fpcf, or `auto`.
    #[arg(long)]
    pub order: Option<String>,
}

#[derive(Debug, Args)]
pub struct TuningArgs {
    /// Rolling-origin folds used for tuning [default: 20].
    #[arg(long)]
    pub folds: Option<usize>,
    /// Band level: bands aim at coverage 1 - alpha [default: 0.1].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Point forecasts only.
    #[arg(long)]
    pub no_band: bool,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub method: MethodArgs,
    /// Forecast horizon in curves [default: 1].
    #[arg(long)]
    pub h: Option<usize>,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Forecast JSON [default: stdout].
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Long-format CSV of the latest curve, the forecast and its band.
    #[arg(long, value_name = "FILE")]
    pub emit_plot_data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct UpdateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub method: MethodArgs,
    /// Last observed grid point of the final curve, in (0, 1).
    #[arg(long)]
    pub q: Option<f64>,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Forecast JSON [default: stdout].
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Long-format CSV of the observed part, the forecast and its band.
    #[arg(long, value_name = "FILE")]
    pub emit_plot_data: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TuneTarget {
    /// fKNN neighbour count (scored by MSE).
    K,
    /// EP exponential weight parameter (scored by MSE).
    Theta,
    /// Number of curves spanning the band (scored by Winkler).
    BandK,
    /// FPCF VAR order (scored by MSE).
    Order,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Parameter to select.
    #[arg(long, value_enum)]
    pub param: TuneTarget,
    /// Exponential weights with this theta when tuning k [default: 1/d weights].
    #[arg(long)]
    pub theta: Option<f64>,
    /// Curves spanning the band when tuning band-k.
    #[arg(long, value_enum, default_value_t = BandChoice::Envelope)]
    pub band_kind: BandChoice,
    /// Explained-variance threshold when tuning the VAR order [default: 0.8].
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Cutoff for dynamic updating.
    #[arg(long, conflicts_with = "h")]
    pub q: Option<f64>,
    /// Forecast horizon in curves.
    #[arg(long)]
    pub h: Option<usize>,
    /// Rolling-origin folds [default: 20].
    #[arg(long)]
    pub folds: Option<usize>,
    /// Band level for band-k [default: 0.1].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Tuning result JSON [default: stdout].
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BandChoice {
    Envelope,
    Nearest,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Comma-separated methods [default: mean,naive,fknn,ep].
    #[arg(long)]
    pub methods: Option<String>,
    /// Number of final curves to forecast [default: 30].
    #[arg(long)]
    pub holdout: Option<usize>,
    /// Cutoff for dynamic updating.
    #[arg(long, conflicts_with = "h")]
    pub q: Option<f64>,
    /// Forecast horizon in curves.
    #[arg(long)]
    pub h: Option<usize>,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Aggregate metrics CSV, one row per method [default: stdout].
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Per-forecast metrics CSV, ordered by origin then method.
    #[arg(long)]
    pub records: Option<PathBuf>,
    /// JSON with every forecast, its truth and the access audit.
    #[arg(long)]
    pub forecasts_json: Option<PathBuf>,
    /// Long-format CSV of the truth and every forecast over the holdout.
    #[arg(long, value_name = "FILE")]
    pub emit_plot_data: Option<PathBuf>,
}

/// Split a method list on commas, keeping `key=value` options with the
/// method they follow (`fknn:theta=1,k=3,ep` is two methods).
pub fn split_methods(list: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for part in list.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let is_option = part.contains('=') && !part.contains(':');
        match out.last_mut() {
            Some(last) if is_option => {
                last.push(',');
                last.push_str(part);
            }
            _ => out.push(part.to_string()),
        }
    }
    out
}

fn parse_method(s: &str) -> Result<MethodSpec> {
    s.parse::<MethodSpec>().map_err(|e| usage(format!("method {s:?}: {e}")))
}

/// Combine a method string with the per-parameter flags.
pub fn build_method(args: &MethodArgs, file: &FileConfig) -> Result<MethodSpec> {
    let base = pick(args.method.clone(), &file.method, config::DEFAULT_METHOD.to_string());
    let mut options = Vec::new();
    if let Some(k) = args.k.or(file.k) {
        options.push(format!("k={k}"));
    }
    if let Some(t) = args.theta.clone().or_else(|| file.theta.clone()) {
        options.push(format!("theta={t}"));
    }
    if let Some(s) = args.season.or(file.season) {
        options.push(format!("s={s}"));
    }
    if let Some(x) = args.threshold.or(file.threshold) {
        options.push(format!("threshold={x}"));
    }
    if let Some(p) = args.order.clone().or_else(|| file.order.clone()) {
        options.push(format!("p={p}"));
    }
    if options.is_empty() {
        return parse_method(&base);
    }
    let sep = if base.contains(':') { "," } else { ":" };
    parse_method(&format!("{base}{sep}{}", options.join(",")))
}

fn focal_spec(dataset: &FtsDataset, q: Option<f64>, h: Option<usize>) -> Result<FocalSpec> {
    let mode = match (q, h) {
        (Some(_), Some(_)) => bail!(usage("--q and --h cannot be combined")),
        (Some(q), None) => FocalMode::Updating { q },
        (None, Some(0)) => bail!(usage("--h must be at least 1")),
        (None, None) | (None, Some(1)) => FocalMode::OneStep,
        (None, Some(h)) => FocalMode::Ahead { h },
    };
    Ok(FocalSpec::new(mode, dataset.grid())?)
}

fn tuning_config(folds: Option<usize>, alpha: f64, file: &FileConfig) -> Result<TuningConfig> {
    let folds = pick(folds, &file.folds, DEFAULT_FOLDS);
    if folds == 0 {
        bail!(usage("--folds must be at least 1"));
    }
    Ok(TuningConfig { folds, alpha, ..Default::default() })
}

fn alpha(flag: Option<f64>, file: &FileConfig) -> Result<f64> {
    let a = pick(flag, &file.alpha, DEFAULT_ALPHA);
    if !(a > 0.0 && a < 1.0) {
        bail!(usage(format!("--alpha {a} must lie in (0, 1)")));
    }
    Ok(a)
}

fn load_input(args: &InputArgs, file: &FileConfig) -> Result<FtsDataset> {
    load_csv(&args.input, pick(args.header, &file.header, HeaderMode::Auto))
}

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn run(cli: Cli) -> Result<()> {
    let file = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Simulate(a) => simulate(a, &file),
        Command::Forecast(a) => {
            let ds = load_input(&a.input, &file)?;
            let spec = focal_spec(&ds, None, a.h.or(file.h))?;
            let out = ForecastOutputs { out: a.out, plot: a.emit_plot_data };
            forecast(&ds, spec, &a.method, &a.tuning, &file, out)
        }
        Command::Update(a) => {
            let ds = load_input(&a.input, &file)?;
            let q = a.q.or(file.q).ok_or_else(|| usage("update needs --q"))?;
            let spec = focal_spec(&ds, Some(q), None)?;
            let out = ForecastOutputs { out: a.out, plot: a.emit_plot_data };
            forecast(&ds, spec, &a.method, &a.tuning, &file, out)
        }
        Command::Tune(a) => tune(a, &file),
        Command::Evaluate(a) => evaluate(a, &file),
    }
}

#[derive(Serialize)]
struct SimulationTrace<'a> {
    params: &'a ShockModelParams,
    trace: &'a fts_projection::SimTrace,
    affected: Vec<bool>,
}

fn simulate(a: SimulateArgs, file: &FileConfig) -> Result<()> {
    let seed = resolve_seed(a.seed, file)?;
    let params = ShockModelParams::new(
        pick(a.mu, &file.mu, config::DEFAULT_MU),
        pick(a.periods, &file.periods, config::DEFAULT_PERIODS),
        pick(a.ppp, &file.ppp, config::DEFAULT_PPP),
        seed,
    );
    if !(0.0..1.0).contains(&params.mu) {
        bail!(usage(format!("--mu {} must lie in [0, 1)", params.mu)));
    }
    let (dataset, trace) = generate_fts(&params)?;
    let csv = csvio::dataset_csv(&dataset)?;
    let trace_json = match &a.trace {
        Some(_) => Some(json(&SimulationTrace {
            params: &params,
            affected: fts_projection::sim::affected_slices(&trace, params.n_periods),
            trace: &trace,
        })?),
        None => None,
    };
    let plot = match &a.emit_plot_data {
        Some(_) => {
            let ppp = params.points_per_period as f64;
            let mut points = Vec::new();
            for (series, values) in [("noise", &trace.noise), ("periodic", &trace.periodic), ("shock", &trace.shock)] {
                points.extend(values.iter().enumerate().map(|(k, v)| PlotPoint { t: k as f64 / ppp, value: *v, series: series.into() }));
            }
            let observed = (0..trace.noise.len()).map(|k| PlotPoint {
                t: k as f64 / ppp,
                value: trace.noise[k] + trace.periodic[k] + trace.shock[k],
                series: "observed".into(),
            });
            points.extend(observed);
            Some(csvio::plot_csv(&points)?)
        }
        None => None,
    };
    if let (Some(path), Some(bytes)) = (&a.trace, &trace_json) {
        write_output(Some(path), bytes)?;
    }
    if let (Some(path), Some(bytes)) = (&a.emit_plot_data, &plot) {
        write_output(Some(path), bytes)?;
    }
    write_output(output_path(&a.out), &csv)
}

/// Forecast JSON layout shared by `forecast` and `update`.
#[derive(Debug, Serialize)]
pub struct ForecastJson {
    pub method: String,
    pub mode: FocalMode,
    pub params: ForecastParams,
    /// Grid indices covered by the forecast.
    pub range: IndexRange,
    /// Grid points covered by the forecast.
    pub t: Vec<f64>,
    pub point: Option<Vec<f64>>,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    pub weights: Vec<Contribution>,
    /// Observed values over `t`, when known.
    pub truth: Option<Vec<f64>>,
}

impl ForecastJson {
    fn new(method: &MethodSpec, spec: &FocalSpec, grid: &[f64], fc: Forecast, truth: Option<Vec<f64>>) -> Self {
        let (lower, upper) = match fc.band {
            Some(b) => (Some(b.lower), Some(b.upper)),
            None => (None, None),
        };
        ForecastJson {
            method: method.label(),
            mode: spec.mode,
            params: fc.params,
            range: fc.range,
            t: grid[fc.range.as_range()].to_vec(),
            point: fc.point,
            lower,
            upper,
            weights: fc.weights,
            truth,
        }
    }

    fn plot_points(&self, offset: f64, label: &str, out: &mut Vec<PlotPoint>) {
        let mut push = |values: &Option<Vec<f64>>, series: String| {
            if let Some(v) = values {
                out.extend(self.t.iter().zip(v).map(|(t, v)| PlotPoint { t: offset + t, value: *v, series: series.clone() }));
            }
        };
        push(&self.point, label.to_string());
        push(&self.lower, format!("{label} lower"));
        push(&self.upper, format!("{label} upper"));
    }
}

struct ForecastOutputs {
    out: Option<PathBuf>,
    plot: Option<PathBuf>,
}

fn forecast(
    ds: &FtsDataset,
    spec: FocalSpec,
    method_args: &MethodArgs,
    tuning: &TuningArgs,
    file: &FileConfig,
    outputs: ForecastOutputs,
) -> Result<()> {
    let method = build_method(method_args, file)?;
    let alpha = alpha(tuning.alpha, file)?;
    let config = BacktestConfig {
        spec,
        holdout: 0,
        tuning: tuning_config(tuning.folds, alpha, file)?,
        alpha: (!tuning.no_band).then_some(alpha),
    };
    let fc = forecast_next(ds, method, &config).context("forecast failed")?;
    let grid = ds.grid().points();
    let out = ForecastJson::new(&method, &spec, &grid, fc, None);
    let plot = match &outputs.plot {
        Some(_) => {
            let last = ds.curve(ds.len() - 1).values();
            let mut points: Vec<PlotPoint> = spec
                .focal_range
                .as_range()
                .map(|j| PlotPoint { t: grid[j], value: last[j], series: "focal".into() })
                .collect();
            out.plot_points(spec.mode.horizon() as f64, &method.label(), &mut points);
            Some(csvio::plot_csv(&points)?)
        }
        None => None,
    };
    let bytes = json(&out)?;
    if let (Some(path), Some(bytes)) = (&outputs.plot, &plot) {
        write_output(Some(path), bytes)?;
    }
    write_output(output_path(&outputs.out), &bytes)
}

#[derive(Serialize)]
struct TuneJson<P: Serialize> {
    param: TuneTarget,
    mode: FocalMode,
    folds: usize,
    best: P,
    score_table: Vec<(P, f64)>,
}

fn tune(a: TuneArgs, file: &FileConfig) -> Result<()> {
    let ds = load_input(&a.input, file)?;
    let spec = focal_spec(&ds, a.q.or(file.q), a.h.or(file.h))?;
    let alpha = alpha(a.alpha, file)?;
    let config = tuning_config(a.folds, alpha, file)?;
    let wrap = |r: TuningResult<usize>| TuneJson { param: a.param, mode: spec.mode, folds: config.folds, best: r.best, score_table: r.score_table };
    let bytes = match a.param {
        TuneTarget::K => {
            let weighting = match a.theta {
                Some(t) => Weighting::exponential(t).map_err(|e| usage(e.to_string()))?,
                None => Weighting::InverseSquareDistance,
            };
            json(&wrap(select_k(&ds, &spec, weighting, &config)?))?
        }
        TuneTarget::Theta => {
            let r = select_theta(&ds, &spec, &config)?;
            json(&TuneJson { param: a.param, mode: spec.mode, folds: config.folds, best: r.best, score_table: r.score_table })?
        }
        TuneTarget::BandK => {
            let kind = match a.band_kind {
                BandChoice::Envelope => BandKind::Envelope,
                BandChoice::Nearest => BandKind::Nearest,
            };
            json(&wrap(select_band_k(&ds, &spec, kind, alpha, &config)?))?
        }
        TuneTarget::Order => {
            if spec.mode != FocalMode::OneStep {
                bail!(usage("the VAR order is only tuned for one-step forecasts"));
            }
            let threshold = pick(a.threshold, &file.threshold, fts_projection::benchmarks::DEFAULT_VARIANCE_THRESHOLD);
            let r = select_var_order(&ds, threshold, fts_projection::backtest::MAX_VAR_ORDER, config.folds)?;
            json(&wrap(r))?
        }
    };
    write_output(output_path(&a.out), &bytes)
}

/// One row of the per-forecast metrics CSV.
#[derive(Debug, Serialize)]
struct RecordRow<'a> {
    origin: usize,
    method: &'a str,
    mse: f64,
    mape: Option<f64>,
    coverage: Option<f64>,
    winkler: Option<f64>,
    width: Option<f64>,
}

impl<'a> From<&'a ForecastRecord> for RecordRow<'a> {
    fn from(r: &'a ForecastRecord) -> Self {
        RecordRow {
            origin: r.origin,
            method: &r.method,
            mse: r.mse,
            mape: r.mape,
            coverage: r.coverage,
            winkler: r.winkler,
            width: r.width,
        }
    }
}

#[derive(Serialize)]
struct EvaluationJson<'a> {
    mode: FocalMode,
    holdout: usize,
    forecasts: Vec<EvaluatedForecast<'a>>,
    summaries: &'a [MethodSummary],
    audit: &'a fts_projection::backtest::AuditReport,
}

#[derive(Serialize)]
struct EvaluatedForecast<'a> {
    origin: usize,
    method: &'a str,
    mse: f64,
    forecast: &'a Forecast,
    truth: &'a [f64],
}

fn evaluate(a: EvaluateArgs, file: &FileConfig) -> Result<()> {
    let ds = load_input(&a.input, file)?;
    let spec = focal_spec(&ds, a.q.or(file.q), a.h.or(file.h))?;
    let list = pick(a.methods.clone(), &file.methods, config::DEFAULT_METHODS.to_string());
    let methods: Vec<MethodSpec> = split_methods(&list).iter().map(|m| parse_method(m)).collect::<Result<_>>()?;
    if methods.is_empty() {
        bail!(usage("--methods is empty"));
    }
    let alpha = alpha(a.tuning.alpha, file)?;
    let holdout = pick(a.holdout, &file.holdout, config::DEFAULT_HOLDOUT);
    let config = BacktestConfig {
        spec,
        holdout,
        tuning: tuning_config(a.tuning.folds, alpha, file)?,
        alpha: (!a.tuning.no_band).then_some(alpha),
    };
    let report = backtest(&ds, &methods, &config).context("evaluation failed")?;
    if !report.audit.violations.is_empty() {
        bail!(FtsError::Numeric(format!("{} reads at or beyond a forecast origin", report.audit.violations.len())));
    }
    eprintln!("audit: {} reads, none at or beyond a forecast origin", report.audit.accesses);

    let summary = csvio::rows_csv(&report.summaries)?;
    let records = match &a.records {
        Some(_) => Some(csvio::rows_csv(&report.records.iter().map(RecordRow::from).collect::<Vec<_>>())?),
        None => None,
    };
    let forecasts = match &a.forecasts_json {
        Some(_) => Some(json(&EvaluationJson {
            mode: spec.mode,
            holdout,
            forecasts: report
                .records
                .iter()
                .map(|r| EvaluatedForecast { origin: r.origin, method: &r.method, mse: r.mse, forecast: &r.forecast, truth: &r.truth })
                .collect(),
            summaries: &report.summaries,
            audit: &report.audit,
        })?),
        None => None,
    };
    let plot = match &a.emit_plot_data {
        Some(_) => {
            let grid = ds.grid().points();
            let mut points = Vec::new();
            let range = spec.projection_range.as_range();
            let mut last_origin = None;
            for r in &report.records {
                let offset = r.origin as f64;
                if last_origin != Some(r.origin) {
                    points.extend(grid[range.clone()].iter().zip(&r.truth).map(|(t, v)| PlotPoint { t: offset + t, value: *v, series: "truth".into() }));
                    last_origin = Some(r.origin);
                }
                let fc = ForecastJson::new(&methods[0], &spec, &grid, r.forecast.clone(), None);
                fc.plot_points(offset, &r.method, &mut points);
            }
            Some(csvio::plot_csv(&points)?)
        }
        None => None,
    };
    for (path, bytes) in [(&a.records, &records), (&a.forecasts_json, &forecasts), (&a.emit_plot_data, &plot)] {
        if let (Some(path), Some(bytes)) = (path, bytes) {
            write_output(Some(path.as_path()), bytes)?;
        }
    }
    write_output(output_path(&a.out), &summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_lists_keep_options_together() {
        assert_eq!(split_methods("naive,snaive:7,fknn,ep"), vec!["naive", "snaive:7", "fknn", "ep"]);
        assert_eq!(split_methods("fknn:theta=1,k=3, ep:theta=auto"), vec!["fknn:theta=1,k=3", "ep:theta=auto"]);
    }

    #[test]
    fn flags_compose_methods() {
        let file = FileConfig::default();
        let args = |m: &str| MethodArgs { method: Some(m.into()), k: None, theta: None, season: None, threshold: None, order: None };
        let ep = MethodArgs { theta: Some("1".into()), ..args("ep") };
        assert_eq!(build_method(&ep, &file).unwrap(), "ep:theta=1".parse().unwrap());
        let knn = MethodArgs { k: Some(3), ..args("fknn:theta=2") };
        assert_eq!(build_method(&knn, &file).unwrap(), "fknn:theta=2,k=3".parse().unwrap());
        let sn = MethodArgs { season: Some(7), ..args("snaive") };
        assert_eq!(build_method(&sn, &file).unwrap(), MethodSpec::SeasonalNaive { season: 7 });
        let bad = MethodArgs { k: Some(3), ..args("ep") };
        let err = build_method(&bad, &file).unwrap_err();
        assert_eq!(exit_code(&err), EXIT_USAGE);
    }

    #[test]
    fn exit_codes_follow_error_kinds() {
        assert_eq!(exit_code(&usage("x")), EXIT_USAGE);
        assert_eq!(exit_code(&anyhow::Error::from(FtsError::ZeroVariance)), EXIT_NUMERIC);
        assert_eq!(exit_code(&anyhow::Error::from(FtsError::Domain("x".into())).context("outer")), EXIT_DATA);
    }
}
