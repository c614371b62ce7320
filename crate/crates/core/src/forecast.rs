//! Point and band forecasts from projected curves.
//!
//! Both estimators are weighted means of projections. fKNN uses the `k`
//! nearest past focal curves; EP uses every member of the focal-curve
//! envelope. Weights are either `1/d` or `exp(-θ d / d_1)`, with `d` the
//! squared L2 distance to the focal and `d_1` the smallest distance among
//! the contributors.

use serde::{Deserialize, Serialize};

use crate::depth::depth_ranking;
use crate::envelope::{envelope_band, Band, Envelope};
use crate::error::{FtsError, Result};
use crate::focal::CandidateSet;
use crate::grid::IndexRange;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Weighting {
    /// `1/d` with `d` the squared distance.
    InverseSquareDistance,
    Exponential { theta: f64 },
}

impl Weighting {
    pub fn exponential(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(FtsError::domain(format!("theta = {theta} must be positive")));
        }
        Ok(Weighting::Exponential { theta })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodTag {
    Fknn,
    Ep,
    Mean,
    Naive,
    SeasonalNaive,
    Fpcf,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ForecastParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band_k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub season: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub components: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
}

/// Normalised weight of one contributing candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub index: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    pub method: MethodTag,
    pub params: ForecastParams,
    /// Grid indices `D_p` the forecast covers.
    pub range: IndexRange,
    pub point: Option<Vec<f64>>,
    pub band: Option<Band>,
    pub weights: Vec<Contribution>,
}

impl Forecast {
    pub fn point_only(method: MethodTag, range: IndexRange, point: Vec<f64>) -> Self {
        Forecast {
            method,
            params: ForecastParams::default(),
            range,
            point: Some(point),
            band: None,
            weights: Vec::new(),
        }
    }

    /// Attach the band of another forecast, keeping this one's point.
    pub fn with_band_from(mut self, other: Forecast) -> Self {
        self.band = other.band;
        self.params.band_k = other.params.band_k;
        self
    }
}

/// Weighted mean of projections. `contributors` carries `(index, distance, projection)`.
///
/// The sum is accumulated with raw weights in the given order and divided once,
/// so equal weights reproduce the plain average.
fn weighted_projection(
    contributors: &[(usize, f64, &[f64])],
    weighting: Weighting,
) -> (Vec<f64>, Vec<Contribution>) {
    let d_min = contributors.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = contributors
        .iter()
        .map(|&(_, d, _)| {
            if d_min == 0.0 {
                // exact duplicates of the focal take all the weight
                if d == 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                match weighting {
                    Weighting::InverseSquareDistance => d_min / d,
                    // shifted by the largest exponent; cancels on normalisation
                    Weighting::Exponential { theta } => (-theta * (d / d_min - 1.0)).exp(),
                }
            }
        })
        .collect();
    let total: f64 = raw.iter().sum();
    let len = contributors[0].2.len();
    let mut point = vec![0.0; len];
    for (&w, (_, _, proj)) in raw.iter().zip(contributors) {
        if w == 0.0 {
            continue;
        }
        for (acc, v) in point.iter_mut().zip(proj.iter()) {
            *acc += w * v;
        }
    }
    point.iter_mut().for_each(|v| *v /= total);
    let weights = raw
        .iter()
        .zip(contributors)
        .map(|(w, c)| Contribution { index: c.0, weight: w / total })
        .collect();
    (point, weights)
}

fn theta_of(weighting: Weighting) -> Option<f64> {
    match weighting {
        Weighting::InverseSquareDistance => None,
        Weighting::Exponential { theta } => Some(theta),
    }
}

fn check_k(k: usize, available: usize) -> Result<()> {
    if k == 0 || k > available {
        return Err(FtsError::domain(format!("k = {k} outside 1..={available}")));
    }
    Ok(())
}

/// fKNN point forecast from the `k` nearest candidates.
pub fn fknn_point(candidates: &CandidateSet<'_>, k: usize, weighting: Weighting) -> Result<Forecast> {
    check_k(k, candidates.len())?;
    let order = candidates.nearest_order();
    fknn_from_order(candidates, &order, k, weighting)
}

pub(crate) fn fknn_from_order(
    candidates: &CandidateSet<'_>,
    order: &[usize],
    k: usize,
    weighting: Weighting,
) -> Result<Forecast> {
    check_k(k, order.len())?;
    let contributors: Vec<(usize, f64, &[f64])> = order[..k]
        .iter()
        .map(|&p| (candidates.pairs[p].index, candidates.distances[p], candidates.pairs[p].projection))
        .collect();
    let (point, weights) = weighted_projection(&contributors, weighting);
    Ok(Forecast {
        method: MethodTag::Fknn,
        params: ForecastParams { k: Some(k), theta: theta_of(weighting), ..Default::default() },
        range: candidates.spec.projection_range,
        point: Some(point),
        band: None,
        weights,
    })
}

/// EP point forecast from all envelope members.
pub fn ep_point(envelope: &Envelope, candidates: &CandidateSet<'_>, weighting: Weighting) -> Result<Forecast> {
    if envelope.is_empty() {
        return Err(FtsError::domain("empty envelope"));
    }
    let contributors: Vec<(usize, f64, &[f64])> = envelope
        .members
        .iter()
        .zip(&envelope.distances)
        .map(|(&i, &d)| (i, d, candidates.pairs[i].projection))
        .collect();
    let (point, weights) = weighted_projection(&contributors, weighting);
    Ok(Forecast {
        method: MethodTag::Ep,
        params: ForecastParams { k: Some(envelope.len()), theta: theta_of(weighting), ..Default::default() },
        range: candidates.spec.projection_range,
        point: Some(point),
        band: None,
        weights,
    })
}

/// Which curve set a band is drawn from.
#[derive(Debug, Clone, Copy)]
pub enum BandSource<'e> {
    /// Projections of the `k` deepest envelope members.
    Envelope(&'e Envelope, usize),
    /// Projections of the `k` nearest candidates.
    Nearest(usize),
}

/// Band forecast: pointwise min and max of the selected projections.
pub fn band_forecast(candidates: &CandidateSet<'_>, source: BandSource<'_>) -> Result<Forecast> {
    let (method, selected) = match source {
        BandSource::Envelope(envelope, k) => {
            check_k(k, envelope.len())?;
            (MethodTag::Ep, envelope_depth_order(envelope, candidates)?[..k].to_vec())
        }
        BandSource::Nearest(k) => {
            check_k(k, candidates.len())?;
            let order = candidates.nearest_order();
            (MethodTag::Fknn, order[..k].iter().map(|&p| candidates.pairs[p].index).collect())
        }
    };
    Ok(band_from_indices(candidates, method, &selected))
}

/// Envelope members from deepest to shallowest in `J ∪ {f}` on `D_f`.
pub fn envelope_depth_order(envelope: &Envelope, candidates: &CandidateSet<'_>) -> Result<Vec<usize>> {
    let members: Vec<(usize, &[f64])> = envelope
        .members
        .iter()
        .map(|&i| (i, candidates.pairs[i].restricted))
        .collect();
    Ok(depth_ranking(&members, candidates.focal)?.into_iter().map(|(i, _)| i).collect())
}

pub(crate) fn band_from_indices(candidates: &CandidateSet<'_>, method: MethodTag, indices: &[usize]) -> Forecast {
    let projections: Vec<&[f64]> = indices.iter().map(|&i| candidates.pairs[i].projection).collect();
    let band = envelope_band(&projections).expect("nonempty selection");
    Forecast {
        method,
        params: ForecastParams { band_k: Some(indices.len()), ..Default::default() },
        range: candidates.spec.projection_range,
        point: None,
        band: Some(band),
        weights: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::build_envelope;
    use crate::focal::{candidate_set, FocalSpec};
    use crate::grid::FtsDataset;

    fn dataset(rows: Vec<Vec<f64>>) -> FtsDataset {
        FtsDataset::from_rows(rows).unwrap()
    }

    #[test]
    fn k1_is_nearest_projection() {
        let ds = dataset(vec![vec![0.0, 0.0], vec![5.0, 5.0], vec![9.0, 9.0], vec![4.0, 4.0]]);
        let cs = candidate_set(&ds, &FocalSpec::one_step(ds.grid())).unwrap();
        let fc = fknn_point(&cs, 1, Weighting::InverseSquareDistance).unwrap();
        // nearest to 4 is curve 1 (value 5); its projection is curve 2
        assert_eq!(fc.point.unwrap(), vec![9.0, 9.0]);
        assert_eq!(fc.weights, vec![Contribution { index: 1, weight: 1.0 }]);
    }

    #[test]
    fn exponential_weights_two_neighbours() {
        let contributors: Vec<(usize, f64, &[f64])> = vec![(0, 1.0, &[1.0]), (1, 2.0, &[0.0])];
        let (point, w) = weighted_projection(&contributors, Weighting::Exponential { theta: 1.0 });
        let e = (-1.0f64).exp();
        assert!((w[0].weight - 1.0 / (1.0 + e)).abs() < 1e-15);
        assert!((w[1].weight - e / (1.0 + e)).abs() < 1e-15);
        assert!((w[0].weight - 0.7311).abs() < 1e-4);
        assert!((point[0] - w[0].weight).abs() < 1e-15);
    }

    #[test]
    fn equal_distances_average_exactly() {
        let contributors: Vec<(usize, f64, &[f64])> =
            vec![(0, 0.7, &[1.0, 0.1]), (1, 0.7, &[0.2, 0.3]), (2, 0.7, &[0.4, -5.0])];
        let expected: Vec<f64> = (0..2)
            .map(|j| (contributors[0].2[j] + contributors[1].2[j] + contributors[2].2[j]) / 3.0)
            .collect();
        for w in [Weighting::InverseSquareDistance, Weighting::Exponential { theta: 2.5 }] {
            assert_eq!(weighted_projection(&contributors, w).0, expected);
        }
    }

    #[test]
    fn zero_distance_averages_duplicates() {
        let contributors: Vec<(usize, f64, &[f64])> = vec![(0, 0.0, &[1.0]), (1, 0.0, &[3.0]), (2, 1.0, &[50.0])];
        for w in [Weighting::InverseSquareDistance, Weighting::Exponential { theta: 1.0 }] {
            let (point, weights) = weighted_projection(&contributors, w);
            assert_eq!(point, vec![2.0]);
            assert_eq!(weights[2].weight, 0.0);
        }
    }

    #[test]
    fn k_out_of_range() {
        let ds = dataset(vec![vec![0.0, 0.0], vec![5.0, 5.0], vec![4.0, 4.0]]);
        let cs = candidate_set(&ds, &FocalSpec::one_step(ds.grid())).unwrap();
        assert!(fknn_point(&cs, 0, Weighting::InverseSquareDistance).is_err());
        assert!(fknn_point(&cs, 3, Weighting::InverseSquareDistance).is_err());
        assert!(band_forecast(&cs, BandSource::Nearest(3)).is_err());
        assert!(Weighting::exponential(0.0).is_err());
    }

    #[test]
    fn single_member_envelope_band_is_degenerate() {
        let ds = dataset(vec![vec![0.0, 0.0], vec![2.0, 2.0], vec![7.0, 3.0], vec![1.0, 1.0]]);
        let cs = candidate_set(&ds, &FocalSpec::one_step(ds.grid())).unwrap();
        let env = build_envelope(&cs).unwrap();
        let fc = band_forecast(&cs, BandSource::Envelope(&env, 1)).unwrap();
        let band = fc.band.unwrap();
        assert_eq!(band.lower, band.upper);
        let ep = ep_point(&env, &cs, Weighting::InverseSquareDistance).unwrap();
        let p = ep.point.unwrap();
        let full = band_forecast(&cs, BandSource::Envelope(&env, env.len())).unwrap().band.unwrap();
        for ((lo, hi), v) in full.lower.iter().zip(&full.upper).zip(&p) {
            assert!(lo <= v && v <= hi);
        }
    }
}
