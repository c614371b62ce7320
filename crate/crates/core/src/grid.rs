//! Evaluation grids, curves and datasets.
//!
//! Functional observations are stored as their values on a shared uniform
//! grid over `[0, 1]`. A curve segment is a plain `&[f64]` together with the
//! [`IndexRange`] of grid points it covers.

use serde::{Deserialize, Serialize};

use crate::error::{FtsError, Result};

/// Tolerance on the grid spacing when validating explicit grid points.
pub const GRID_TOLERANCE: f64 = 1e-12;

/// Uniform grid of `m` points on `[0, 1]`, with `points[0] = 0` and `points[m-1] = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    m: usize,
}

impl Grid {
    pub fn new(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(FtsError::domain(format!("grid needs at least 2 points, got {m}")));
        }
        Ok(Grid { m })
    }

    /// Validate explicit points as the canonical uniform grid on `[0, 1]`.
    pub fn from_points(points: &[f64]) -> Result<Self> {
        let grid = Grid::new(points.len())?;
        for (i, &p) in points.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) || (p - grid.point(i)).abs() > GRID_TOLERANCE {
                return Err(FtsError::domain(format!(
                    "grid point {i} = {p} is not on the uniform grid over [0, 1]"
                )));
            }
        }
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.m - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        i as f64 / (self.m - 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.point(i)).collect()
    }

    pub fn full_range(&self) -> IndexRange {
        IndexRange::new(0, self.m)
    }

    /// Number of grid points `t` with `t <= q`.
    pub fn count_at_or_below(&self, q: f64) -> usize {
        (0..self.m).take_while(|&i| self.point(i) <= q + GRID_TOLERANCE).count()
    }

    /// Check that `range` is a nonempty range of this grid.
    pub fn check_range(&self, range: IndexRange) -> Result<()> {
        if range.is_empty() {
            return Err(FtsError::domain("empty grid index range"));
        }
        if range.end > self.m {
            return Err(FtsError::domain(format!(
                "index range {}..{} exceeds grid of {} points",
                range.start, range.end, self.m
            )));
        }
        Ok(())
    }
}

/// Half-open range `start..end` of grid indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexRange {
    pub start: usize,
    pub end: usize,
}

impl IndexRange {
    pub fn new(start: usize, end: usize) -> Self {
        IndexRange { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// Whether `other` lies entirely inside this range.
    pub fn covers(&self, other: IndexRange) -> bool {
        other.start >= self.start && other.end <= self.end
    }

    pub fn as_range(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }
}

/// A curve evaluated on a [`Grid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve(Vec<f64>);

impl Curve {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FtsError::domain(format!("curve value {i} is not finite")));
        }
        Ok(Curve(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }
}

/// Ordered sequence of curves `y_1, ..., y_N` sharing one grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FtsDataset {
    grid: Grid,
    curves: Vec<Curve>,
}

impl FtsDataset {
    pub fn new(grid: Grid, curves: Vec<Curve>) -> Result<Self> {
        if curves.len() < 2 {
            return Err(FtsError::TooFewCurves { needed: 2, got: curves.len() });
        }
        for (i, c) in curves.iter().enumerate() {
            if c.len() != grid.len() {
                return Err(FtsError::domain(format!(
                    "curve {i} has {} values, grid has {} points",
                    c.len(),
                    grid.len()
                )));
            }
        }
        Ok(FtsDataset { grid, curves })
    }

    /// Build from raw rows, one curve per row, on the uniform grid implied by the row length.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.first().map(Vec::len).unwrap_or(0);
        let grid = Grid::new(m)?;
        let curves = rows.into_iter().map(Curve::new).collect::<Result<Vec<_>>>()?;
        FtsDataset::new(grid, curves)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn curves(&self) -> &[Curve] {
        &self.curves
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn curve(&self, i: usize) -> &Curve {
        &self.curves[i]
    }

    /// The first `n` curves as a new dataset.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        if n > self.len() {
            return Err(FtsError::domain(format!("prefix of {n} curves from {}", self.len())));
        }
        FtsDataset::new(self.grid, self.curves[..n].to_vec())
    }
}

/// Restrict a curve to a grid index range.
pub fn restrict(curve: &[f64], range: IndexRange) -> Result<&[f64]> {
    if range.is_empty() {
        return Err(FtsError::domain("empty restriction range"));
    }
    if range.end > curve.len() {
        return Err(FtsError::domain(format!(
            "restriction {}..{} out of bounds for {} values",
            range.start,
            range.end,
            curve.len()
        )));
    }
    Ok(&curve[range.as_range()])
}

/// Squared L2 distance between two segments on a grid with the given spacing.
///
/// The integral of the squared difference of the piecewise-linear
/// interpolants is computed in closed form, so the result is exact for
/// piecewise-linear curves.
pub fn l2_sq_distance(a: &[f64], b: &[f64], grid: &Grid) -> Result<f64> {
    if a.len() != b.len() {
        return Err(FtsError::LengthMismatch { left: a.len(), right: b.len() });
    }
    if a.len() > grid.len() {
        return Err(FtsError::domain("segment longer than grid"));
    }
    Ok(l2_sq(a, b, grid.spacing()))
}

pub(crate) fn l2_sq(a: &[f64], b: &[f64], spacing: f64) -> f64 {
    let mut acc = 0.0;
    let mut prev: Option<f64> = None;
    for (x, y) in a.iter().zip(b) {
        let e = x - y;
        if let Some(p) = prev {
            acc += p * p + p * e + e * e;
        }
        prev = Some(e);
    }
    // ∫ over [0, h] of a linear between p and e squared is h (p² + pe + e²) / 3
    acc * spacing / 3.0
}
