//! Modified band depth relative to a past-focal-curve set and the focal curve.
//!
//! Depths are kept as exact integer counts: for a sample of `n` curves on `m`
//! grid points, a curve's depth is `hits / (m * C(n, 2))`, where `hits`
//! counts (pair, grid point) combinations whose band contains the curve.
//! Comparisons between depths are done on these rationals, so ties are exact
//! and the fast rank-based path agrees with the pairwise definition.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FtsError, Result};

/// Depth of one curve in a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthRecord {
    pub index: usize,
    pub depth: f64,
}

/// Exact band-depth rational `hits / trials`.
#[derive(Debug, Clone, Copy)]
pub struct BandCount {
    pub hits: u64,
    pub trials: u64,
}

impl BandCount {
    pub const ZERO: BandCount = BandCount { hits: 0, trials: 1 };

    pub fn value(&self) -> f64 {
        self.hits as f64 / self.trials as f64
    }
}

impl PartialEq for BandCount {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for BandCount {}

impl PartialOrd for BandCount {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for BandCount {
    fn cmp(&self, other: &Self) -> Ordering {
        let lhs = self.hits as u128 * other.trials as u128;
        let rhs = other.hits as u128 * self.trials as u128;
        lhs.cmp(&rhs)
    }
}

#[inline]
fn choose2(k: usize) -> u64 {
    let k = k as u64;
    k * k.saturating_sub(1) / 2
}

fn check_aligned(curves: &[&[f64]], len: usize) -> Result<()> {
    for c in curves {
        if c.len() != len {
            return Err(FtsError::LengthMismatch { left: c.len(), right: len });
        }
    }
    if len == 0 {
        return Err(FtsError::domain("empty curve segments"));
    }
    Ok(())
}

/// Number of grid points where `lower <= f <= upper`.
pub(crate) fn enveloped_points(lower: &[f64], upper: &[f64], f: &[f64]) -> usize {
    f.iter()
        .zip(lower.iter().zip(upper))
        .filter(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
        .count()
}

/// Fraction of grid points at which `f` lies between the pointwise min and max of `members`.
pub fn envelopment(members: &[&[f64]], f: &[f64]) -> Result<f64> {
    if members.is_empty() {
        return Err(FtsError::domain("envelopment of an empty member set"));
    }
    check_aligned(members, f.len())?;
    let (lower, upper) = pointwise_bounds(members);
    Ok(enveloped_points(&lower, &upper, f) as f64 / f.len() as f64)
}

pub(crate) fn pointwise_bounds(members: &[&[f64]]) -> (Vec<f64>, Vec<f64>) {
    let mut lower = members[0].to_vec();
    let mut upper = members[0].to_vec();
    for c in &members[1..] {
        for ((lo, hi), &v) in lower.iter_mut().zip(upper.iter_mut()).zip(c.iter()) {
            if v < *lo {
                *lo = v;
            }
            if v > *hi {
                *hi = v;
            }
        }
    }
    (lower, upper)
}

/// Modified band depth `D(y, J)` with bands drawn from `J ∪ {f}`.
///
/// The average runs over unordered pairs of distinct curves of `J ∪ {f}`,
/// including pairs that contain `y` itself; boundary contact counts as inside.
/// This is the direct pairwise evaluation, `O(|J|^2 m)`.
pub fn mbd(y: &[f64], members: &[&[f64]], focal: &[f64]) -> Result<f64> {
    if members.len() < 2 {
        return Err(FtsError::domain(format!(
            "band depth needs at least 2 reference curves, got {}",
            members.len()
        )));
    }
    check_aligned(members, y.len())?;
    check_aligned(&[focal], y.len())?;
    let mut reference: Vec<&[f64]> = members.to_vec();
    reference.push(focal);
    let n = reference.len();
    let mut hits = 0u64;
    for a in 0..n {
        for b in a + 1..n {
            let (x, z) = (reference[a], reference[b]);
            hits += y
                .iter()
                .zip(x.iter().zip(z))
                .filter(|(v, (p, q))| p.min(**q) <= **v && **v <= p.max(**q))
                .count() as u64;
        }
    }
    Ok(hits as f64 / (choose2(n) * y.len() as u64) as f64)
}

/// Band counts of every curve in `sample` with respect to the whole sample.
///
/// At each grid point the values are sorted once; a curve with `below`
/// values strictly under it and `above` strictly over it lies outside exactly
/// `C(below, 2) + C(above, 2)` of the `C(n, 2)` bands.
pub fn band_counts(sample: &[&[f64]]) -> Result<Vec<BandCount>> {
    let n = sample.len();
    if n < 2 {
        return Err(FtsError::domain("band depth needs at least 2 curves"));
    }
    let m = sample[0].len();
    check_aligned(sample, m)?;
    let pairs = choose2(n);

    let hits = (0..m)
        .into_par_iter()
        .fold(
            || (vec![0u64; n], Vec::with_capacity(n)),
            |(mut acc, mut column): (Vec<u64>, Vec<(f64, u32)>), t| {
                column.clear();
                column.extend(sample.iter().enumerate().map(|(i, c)| (c[t], i as u32)));
                column.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
                let mut start = 0;
                while start < n {
                    let v = column[start].0;
                    let mut end = start + 1;
                    while end < n && column[end].0 == v {
                        end += 1;
                    }
                    let inside = pairs - choose2(start) - choose2(n - end);
                    for &(_, i) in &column[start..end] {
                        acc[i as usize] += inside;
                    }
                    start = end;
                }
                (acc, column)
            },
        )
        .map(|(acc, _)| acc)
        .reduce(
            || vec![0u64; n],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );

    let trials = pairs * m as u64;
    Ok(hits.into_iter().map(|h| BandCount { hits: h, trials }).collect())
}

/// Modified band depth of every curve in `sample` with respect to the sample,
/// in `O(n log n · m)`.
pub fn mbd_all_fast(sample: &[&[f64]]) -> Result<Vec<DepthRecord>> {
    if sample.len() < 3 {
        return Err(FtsError::domain(format!(
            "fast band depth needs at least 3 curves, got {}",
            sample.len()
        )));
    }
    Ok(band_counts(sample)?
        .into_iter()
        .enumerate()
        .map(|(index, c)| DepthRecord { index, depth: c.value() })
        .collect())
}

/// Band count of the focal `f` with respect to `members ∪ {f}`, in `O(n · m)`.
pub fn focal_band_count(members: &[&[f64]], focal: &[f64]) -> Result<BandCount> {
    if members.is_empty() {
        return Err(FtsError::domain("focal depth needs at least 1 member"));
    }
    check_aligned(members, focal.len())?;
    let n = members.len() + 1;
    let pairs = choose2(n);
    let mut hits = 0u64;
    for (t, &v) in focal.iter().enumerate() {
        let mut below = 0;
        let mut above = 0;
        for c in members {
            // plain comparisons so that -0.0 and 0.0 tie
            if c[t] < v {
                below += 1;
            } else if c[t] > v {
                above += 1;
            }
        }
        hits += pairs - choose2(below) - choose2(above);
    }
    Ok(BandCount { hits, trials: pairs * focal.len() as u64 })
}

/// Members ranked from deepest to shallowest, depth taken in `members ∪ {f}`.
///
/// `members` carries `(candidate index, segment)`. Ties go to the smaller index.
pub fn depth_ranking(members: &[(usize, &[f64])], focal: &[f64]) -> Result<Vec<(usize, BandCount)>> {
    if members.is_empty() {
        return Err(FtsError::domain("depth ranking of an empty set"));
    }
    let mut sample: Vec<&[f64]> = members.iter().map(|(_, c)| *c).collect();
    sample.push(focal);
    let counts = band_counts(&sample)?;
    let mut ranked: Vec<(usize, BandCount)> =
        members.iter().zip(counts).map(|((i, _), c)| (*i, c)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(ranked)
}

/// Indices of the `k` deepest members of `J`; the focal is never returned.
pub fn deepest_k(members: &[(usize, &[f64])], focal: &[f64], k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > members.len() {
        return Err(FtsError::domain(format!(
            "k = {k} outside 1..={} for deepest curves",
            members.len()
        )));
    }
    Ok(depth_ranking(members, focal)?.into_iter().take(k).map(|(i, _)| i).collect())
}
