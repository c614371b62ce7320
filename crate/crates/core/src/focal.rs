//! Focal curves, past-focal-curve samples and their projections.
//!
//! A [`FocalSpec`] fixes the prediction scenario: the focal domain `D_f`
//! (grid indices observed on the most recent curve) and the prediction
//! domain `D_p`. [`candidate_set`] pairs every admissible past curve,
//! restricted to `D_f`, with its projection on `D_p`.
//!
//! Curve data is read through the [`CurveSource`] trait so that backtests can
//! hand methods a [`HistoryView`] that hides everything at or after the
//! forecast origin and, optionally, logs every read for auditing.

use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{FtsError, Result};
use crate::grid::{l2_sq, FtsDataset, Grid, IndexRange};

/// Prediction scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum FocalMode {
    /// Forecast `y_{N+1}` on `[0, 1]` from `y_1..y_N`.
    OneStep,
    /// Forecast `y_N` on `(q, 1]` having observed it on `[0, q]`.
    Updating { q: f64 },
    /// Forecast `y_{N+h}` on `[0, 1]`.
    Ahead { h: usize },
}

impl FocalMode {
    /// Horizon between the focal curve and the curve being predicted.
    pub fn horizon(&self) -> usize {
        match self {
            FocalMode::OneStep => 1,
            FocalMode::Updating { .. } => 0,
            FocalMode::Ahead { h } => *h,
        }
    }
}

/// A [`FocalMode`] resolved against a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FocalSpec {
    pub mode: FocalMode,
    pub focal_range: IndexRange,
    pub projection_range: IndexRange,
}

impl FocalSpec {
    pub fn new(mode: FocalMode, grid: &Grid) -> Result<Self> {
        let full = grid.full_range();
        match mode {
            FocalMode::OneStep => Ok(FocalSpec { mode, focal_range: full, projection_range: full }),
            FocalMode::Ahead { h } => {
                if h == 0 {
                    return Err(FtsError::domain("horizon h must be at least 1"));
                }
                Ok(FocalSpec { mode, focal_range: full, projection_range: full })
            }
            FocalMode::Updating { q } => {
                if !(q > 0.0 && q < 1.0) {
                    return Err(FtsError::domain(format!("cutoff q = {q} must lie in (0, 1)")));
                }
                let split = grid.count_at_or_below(q);
                if split < 2 {
                    return Err(FtsError::domain(format!(
                        "cutoff q = {q} leaves fewer than 2 observed grid points"
                    )));
                }
                if split >= grid.len() {
                    return Err(FtsError::domain(format!(
                        "cutoff q = {q} leaves no grid point to predict"
                    )));
                }
                Ok(FocalSpec {
                    mode,
                    focal_range: IndexRange::new(0, split),
                    projection_range: IndexRange::new(split, grid.len()),
                })
            }
        }
    }

    pub fn one_step(grid: &Grid) -> Self {
        FocalSpec::new(FocalMode::OneStep, grid).expect("one-step spec is always valid")
    }

    /// Minimum number of curves a source must hold for this mode.
    pub fn min_curves(&self) -> usize {
        match self.mode {
            FocalMode::OneStep | FocalMode::Updating { .. } => 3,
            FocalMode::Ahead { h } => h + 2,
        }
    }

    /// Number of candidate pairs produced from `n` curves.
    pub fn candidate_count(&self, n: usize) -> usize {
        match self.mode {
            FocalMode::OneStep | FocalMode::Updating { .. } => n.saturating_sub(1),
            FocalMode::Ahead { h } => n.saturating_sub(h),
        }
    }
}

/// Read access to an ordered collection of curves.
pub trait CurveSource: Sync {
    fn grid(&self) -> &Grid;

    /// Number of curves visible through this source.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Values of curve `index` over `range`.
    fn segment(&self, index: usize, range: IndexRange) -> &[f64];
}

impl CurveSource for FtsDataset {
    fn grid(&self) -> &Grid {
        FtsDataset::grid(self)
    }

    fn len(&self) -> usize {
        FtsDataset::len(self)
    }

    fn segment(&self, index: usize, range: IndexRange) -> &[f64] {
        &self.curve(index).values()[range.as_range()]
    }
}

/// One recorded read through a [`HistoryView`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Access {
    pub index: usize,
    pub range: IndexRange,
}

/// Which reads a view is allowed to serve: curves `0..full` entirely, and
/// optionally curve `full` restricted to a range (the partially observed focal).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AccessLimit {
    pub full: usize,
    pub partial: Option<IndexRange>,
}

impl AccessLimit {
    pub fn permits(&self, access: &Access) -> bool {
        if access.index < self.full {
            return true;
        }
        match self.partial {
            Some(r) => access.index == self.full && r.covers(access.range),
            None => false,
        }
    }
}

/// Thread-safe record of curve reads, checked against an [`AccessLimit`].
#[derive(Debug)]
pub struct AccessLog {
    limit: AccessLimit,
    entries: Mutex<Vec<Access>>,
}

impl AccessLog {
    pub fn new(limit: AccessLimit) -> Self {
        AccessLog { limit, entries: Mutex::new(Vec::new()) }
    }

    fn record(&self, access: Access) {
        self.entries.lock().expect("access log poisoned").push(access);
    }

    pub fn limit(&self) -> AccessLimit {
        self.limit
    }

    pub fn accesses(&self) -> usize {
        self.entries.lock().expect("access log poisoned").len()
    }

    pub fn violations(&self) -> Vec<Access> {
        self.entries
            .lock()
            .expect("access log poisoned")
            .iter()
            .filter(|a| !self.limit.permits(a))
            .copied()
            .collect()
    }
}

/// The first `len` curves of another source, with an optional read log.
///
/// The view reports only `len` curves but still serves reads past that point
/// from the underlying source; such reads are what the audit log catches.
pub struct HistoryView<'a> {
    source: &'a dyn CurveSource,
    len: usize,
    log: Option<&'a AccessLog>,
}

impl<'a> HistoryView<'a> {
    pub fn new(source: &'a dyn CurveSource, len: usize) -> Result<Self> {
        if len > source.len() {
            return Err(FtsError::domain(format!(
                "history of {len} curves requested from {}",
                source.len()
            )));
        }
        Ok(HistoryView { source, len, log: None })
    }

    pub fn with_log(mut self, log: &'a AccessLog) -> Self {
        self.log = Some(log);
        self
    }
}

impl CurveSource for HistoryView<'_> {
    fn grid(&self) -> &Grid {
        self.source.grid()
    }

    fn len(&self) -> usize {
        self.len
    }

    fn segment(&self, index: usize, range: IndexRange) -> &[f64] {
        if let Some(log) = self.log {
            log.record(Access { index, range });
        }
        self.source.segment(index, range)
    }
}

/// A past focal curve `y_{i|f}` and its projection `P y_{i|f}`.
#[derive(Debug, Clone, Copy)]
pub struct CandidatePair<'a> {
    /// Zero-based index of the curve `y_i` in the source.
    pub index: usize,
    pub restricted: &'a [f64],
    pub projection: &'a [f64],
}

/// The focal curve with its past-focal-curves sample and squared L2 distances.
#[derive(Debug, Clone)]
pub struct CandidateSet<'a> {
    pub spec: FocalSpec,
    pub focal: &'a [f64],
    /// Candidates in time order; `pairs[i].index == i`.
    pub pairs: Vec<CandidatePair<'a>>,
    /// `d_i = ||y_{i|f} - f||^2`, aligned with `pairs`.
    pub distances: Vec<f64>,
    pub spacing: f64,
}

impl<'a> CandidateSet<'a> {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Positions into `pairs` sorted by increasing distance, ties by smaller curve index.
    pub fn nearest_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.pairs.len()).collect();
        order.sort_by(|&a, &b| {
            self.distances[a]
                .total_cmp(&self.distances[b])
                .then(self.pairs[a].index.cmp(&self.pairs[b].index))
        });
        order
    }
}

/// Build the focal curve and candidate pairs for `spec` from `source`.
///
/// With `N` curves `y_0..y_{N-1}` (zero-based):
/// * one-step: focal `y_{N-1}`, candidates `i = 0..N-2` projecting to `y_{i+1}`;
/// * h-step: candidates `i = 0..N-1-h` projecting to `y_{i+h}`;
/// * updating: focal `y_{N-1}` on `D_f`, candidates `i = 0..N-2` projecting to
///   their own values on `D_p`.
pub fn candidate_set<'a, S: CurveSource + ?Sized>(
    source: &'a S,
    spec: &FocalSpec,
) -> Result<CandidateSet<'a>> {
    let n = source.len();
    if n < spec.min_curves() {
        return Err(FtsError::TooFewCurves { needed: spec.min_curves(), got: n });
    }
    let grid = source.grid();
    grid.check_range(spec.focal_range)?;
    grid.check_range(spec.projection_range)?;

    let focal = source.segment(n - 1, spec.focal_range);
    let count = spec.candidate_count(n);
    let lead = spec.mode.horizon();
    let spacing = grid.spacing();

    let mut pairs = Vec::with_capacity(count);
    let mut distances = Vec::with_capacity(count);
    for i in 0..count {
        let restricted = source.segment(i, spec.focal_range);
        let projection = source.segment(i + lead, spec.projection_range);
        distances.push(l2_sq(restricted, focal, spacing));
        pairs.push(CandidatePair { index: i, restricted, projection });
    }
    Ok(CandidateSet { spec: *spec, focal, pairs, distances, spacing })
}
