#![allow(clippy::needless_range_loop)]

mod common;

use common::*;
use fts_projection::envelope::{build_envelope, Envelope};
use fts_projection::focal::{candidate_set, FocalMode, FocalSpec};
use fts_projection::forecast::{band_forecast, ep_point, fknn_point, BandSource, Weighting};
use fts_projection::grid::{l2_sq_distance, restrict, FtsDataset, Grid, IndexRange};
use fts_projection::metrics::{coverage, mape, mse, winkler};
use fts_projection::envelope::Band;
use proptest::prelude::*;

fn curves(n: std::ops::RangeInclusive<usize>, m: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (n, m).prop_flat_map(|(n, m)| prop::collection::vec(prop::collection::vec(-3.0f64..3.0, m), n))
}

#[test]
fn distance_examples() {
    let g = Grid::new(11).unwrap();
    let f = vec![0.7; 11];
    assert_eq!(l2_sq_distance(&f, &f, &g).unwrap(), 0.0);
    assert!((l2_sq_distance(&[0.0; 11], &[1.0; 11], &g).unwrap() - 1.0).abs() < 1e-14);
    assert!(l2_sq_distance(&f, &f[..5], &g).is_err());
}

#[test]
fn distance_matches_fine_quadrature() {
    let g = Grid::new(16).unwrap();
    let mut r = rng(21);
    for _ in 0..50 {
        let c = random_curves(&mut r, 2, 16, false);
        let exact = l2_sq_distance(&c[0], &c[1], &g).unwrap();
        let fine = fine_l2_sq(&c[0], &c[1], 10_001);
        assert!(((exact - fine) / fine).abs() <= 1e-3, "{exact} vs {fine}");
    }
}

#[test]
fn updating_split_on_ten_points() {
    let g = Grid::new(10).unwrap();
    let spec = FocalSpec::new(FocalMode::Updating { q: 0.5 }, &g).unwrap();
    assert_eq!(spec.focal_range, IndexRange::new(0, 5));
    assert_eq!(spec.projection_range, IndexRange::new(5, 10));
    assert!(FocalSpec::new(FocalMode::Updating { q: 0.05 }, &g).is_err());
    assert!(FocalSpec::new(FocalMode::Updating { q: 1.0 }, &g).is_err());
    assert!(FocalSpec::new(FocalMode::Ahead { h: 0 }, &g).is_err());
}

#[test]
fn restrict_bounds() {
    let c = [1.0, 2.0, 3.0];
    assert_eq!(restrict(&c, IndexRange::new(0, 3)).unwrap(), &c);
    assert!(restrict(&c, IndexRange::new(1, 1)).is_err());
    assert!(restrict(&c, IndexRange::new(2, 4)).is_err());
}

#[test]
fn two_neighbour_exponential_weights() {
    // focal 0; candidates at squared distance 1 and 2
    let s2 = 2f64.sqrt();
    let rows = vec![vec![1.0; 3], vec![5.0; 3], vec![s2; 3], vec![7.0; 3], vec![0.0; 3]];
    let ds = FtsDataset::from_rows(rows).unwrap();
    let spec = FocalSpec::new(FocalMode::Ahead { h: 1 }, ds.grid()).unwrap();
    let cs = candidate_set(&ds, &spec).unwrap();
    let fc = fknn_point(&cs, 2, Weighting::Exponential { theta: 1.0 }).unwrap();
    let w: Vec<f64> = fc.weights.iter().map(|c| c.weight).collect();
    let e = (-1.0f64).exp();
    assert!((w[0] - 1.0 / (1.0 + e)).abs() < 1e-12 && (w[1] - e / (1.0 + e)).abs() < 1e-12);
    assert!((w[0] - 0.7311).abs() < 1e-4);
}

#[test]
fn metric_examples() {
    let truth = [1.0, 2.0, 4.0];
    assert_eq!(mse(&truth, &truth).unwrap(), 0.0);
    assert!((mse(&[1.5, 2.5, 4.5], &truth).unwrap() - 0.25).abs() < 1e-15);
    assert!((mape(&[1.1, 2.2, 4.4], &truth).unwrap() - 10.0).abs() < 1e-9);
    assert!(mape(&[1.0], &[0.0]).is_err());
    let band = Band { lower: vec![0.0], upper: vec![1.0] };
    assert!((winkler(&band, &[1.2], 0.2).unwrap() - 3.0).abs() < 1e-12);
    assert!(winkler(&band, &[0.5], 1.0).is_err());
    let half = Band { lower: vec![0.0; 4], upper: vec![1.0; 4] };
    assert_eq!(coverage(&half, &[0.5, 2.0, 1.0, -1.0]).unwrap(), 0.5);
}

fn dataset_and_spec(rows: Vec<Vec<f64>>, updating: bool) -> (FtsDataset, FocalSpec) {
    let ds = FtsDataset::from_rows(rows).unwrap();
    let m = ds.grid().len();
    let mode = if updating { FocalMode::Updating { q: ds.grid().point(m / 2) } } else { FocalMode::OneStep };
    let spec = FocalSpec::new(mode, ds.grid()).unwrap();
    (ds, spec)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn distance_is_a_squared_metric(c in curves(3..=3, 2..=20)) {
        let g = Grid::new(c[0].len()).unwrap();
        let d = |a: &[f64], b: &[f64]| l2_sq_distance(a, b, &g).unwrap();
        prop_assert!(d(&c[0], &c[1]) >= 0.0);
        prop_assert_eq!(d(&c[0], &c[1]), d(&c[1], &c[0]));
        prop_assert!(d(&c[0], &c[1]) > 0.0 || c[0] == c[1]);
        let (ab, bc, ac) = (d(&c[0], &c[1]).sqrt(), d(&c[1], &c[2]).sqrt(), d(&c[0], &c[2]).sqrt());
        prop_assert!(ac <= ab + bc + 1e-9);
    }

    #[test]
    fn restrict_is_idempotent(c in prop::collection::vec(-1.0f64..1.0, 2..30), a in 0usize..30, b in 0usize..30) {
        let (lo, hi) = (a.min(b) % c.len(), (a.max(b) % c.len()) + 1);
        prop_assume!(lo < hi);
        let r = IndexRange::new(lo, hi);
        let once = restrict(&c, r).unwrap();
        prop_assert_eq!(restrict(once, IndexRange::new(0, once.len())).unwrap(), once);
    }

    #[test]
    fn candidate_pairing_is_lossless(rows in curves(4..=10, 4..=12)) {
        let (ds, spec) = dataset_and_spec(rows.clone(), false);
        let cs = candidate_set(&ds, &spec).unwrap();
        let projections: Vec<Vec<f64>> = cs.pairs.iter().map(|p| p.projection.to_vec()).collect();
        prop_assert_eq!(&projections[..], &rows[1..]);

        let (ds, spec) = dataset_and_spec(rows.clone(), true);
        let cs = candidate_set(&ds, &spec).unwrap();
        for p in &cs.pairs {
            let joined: Vec<f64> = p.restricted.iter().chain(p.projection).copied().collect();
            prop_assert_eq!(&joined, &rows[p.index]);
        }
    }

    #[test]
    fn point_forecasts_are_convex(rows in curves(4..=14, 4..=10), updating in any::<bool>(), k in 1usize..12, theta in 0.1f64..20.0) {
        let (ds, spec) = dataset_and_spec(rows, updating);
        let cs = candidate_set(&ds, &spec).unwrap();
        let k = k.min(cs.len());
        for w in [Weighting::InverseSquareDistance, Weighting::Exponential { theta }] {
            let fc = fknn_point(&cs, k, w).unwrap();
            let total: f64 = fc.weights.iter().map(|c| c.weight).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert!(fc.weights.iter().all(|c| c.weight >= 0.0));
            let point = fc.point.unwrap();
            let contributors: Vec<&[f64]> = fc.weights.iter().map(|c| cs.pairs[c.index].projection).collect();
            for (t, v) in point.iter().enumerate() {
                let lo = contributors.iter().map(|p| p[t]).fold(f64::INFINITY, f64::min);
                let hi = contributors.iter().map(|p| p[t]).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(lo - 1e-12 <= *v && *v <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn forecasts_ignore_distance_scale(rows in curves(4..=12, 4..=10), scale in 0.01f64..100.0, theta in 0.1f64..5.0) {
        let (ds, spec) = dataset_and_spec(rows, false);
        let cs = candidate_set(&ds, &spec).unwrap();
        let mut scaled = cs.clone();
        scaled.distances.iter_mut().for_each(|d| *d *= scale);
        let k = cs.len().min(5);
        for w in [Weighting::InverseSquareDistance, Weighting::Exponential { theta }] {
            let a = fknn_point(&cs, k, w).unwrap().point.unwrap();
            let b = fknn_point(&scaled, k, w).unwrap().point.unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
            }
        }
    }

    #[test]
    fn fknn_over_all_equals_ep_over_all(rows in curves(4..=12, 4..=10), theta in 0.1f64..5.0) {
        let (ds, spec) = dataset_and_spec(rows, false);
        let cs = candidate_set(&ds, &spec).unwrap();
        let order = cs.nearest_order();
        let everyone = Envelope {
            members: order.clone(),
            distances: order.iter().map(|&p| cs.distances[p]).collect(),
            iterations: 0,
            focal_depth_trace: vec![],
            batches: vec![],
        };
        for w in [Weighting::InverseSquareDistance, Weighting::Exponential { theta }] {
            let a = fknn_point(&cs, cs.len(), w).unwrap().point.unwrap();
            let b = ep_point(&everyone, &cs, w).unwrap().point.unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn bands_contain_their_point_forecasts(rows in curves(5..=14, 4..=10), updating in any::<bool>(), k in 1usize..10) {
        let (ds, spec) = dataset_and_spec(rows, updating);
        let cs = candidate_set(&ds, &spec).unwrap();
        let k = k.min(cs.len());
        let w = Weighting::Exponential { theta: 1.0 };
        let point = fknn_point(&cs, k, w).unwrap().point.unwrap();
        let band = band_forecast(&cs, BandSource::Nearest(k)).unwrap().band.unwrap();
        for t in 0..point.len() {
            prop_assert!(band.lower[t] <= band.upper[t]);
            prop_assert!(band.lower[t] - 1e-12 <= point[t] && point[t] <= band.upper[t] + 1e-12);
        }
        let env = build_envelope(&cs).unwrap();
        let ep = ep_point(&env, &cs, w).unwrap().point.unwrap();
        let full = band_forecast(&cs, BandSource::Envelope(&env, env.len())).unwrap().band.unwrap();
        for t in 0..ep.len() {
            prop_assert!(full.lower[t] - 1e-12 <= ep[t] && ep[t] <= full.upper[t] + 1e-12);
        }
        let single = band_forecast(&cs, BandSource::Envelope(&env, 1)).unwrap().band.unwrap();
        prop_assert_eq!(single.lower, single.upper);
        prop_assert!(band_forecast(&cs, BandSource::Envelope(&env, env.len() + 1)).is_err());
    }

    #[test]
    fn winkler_dominates_width(
        lower in prop::collection::vec(-2.0f64..0.0, 1..20),
        spread in 0.0f64..2.0,
        truth_shift in -3.0f64..3.0,
        alpha in 0.01f64..0.99,
    ) {
        let upper: Vec<f64> = lower.iter().map(|l| l + spread).collect();
        let truth: Vec<f64> = lower.iter().map(|l| l + truth_shift).collect();
        let band = Band { lower, upper };
        let w = winkler(&band, &truth, alpha).unwrap();
        let width = band.mean_width();
        let cov = coverage(&band, &truth).unwrap();
        prop_assert!(w >= width - 1e-12);
        prop_assert_eq!((w - width).abs() <= 1e-12, cov == 1.0);
    }

    #[test]
    fn winkler_monotone_in_coverage(width in 0.1f64..2.0, alpha in 0.05f64..0.5, out in 0.01f64..1.0) {
        // same width; moving one truth point from inside to outside raises the score
        let band = Band { lower: vec![0.0; 4], upper: vec![width; 4] };
        let inside = vec![width / 2.0; 4];
        let mut outside = inside.clone();
        outside[0] = width + out;
        let a = winkler(&band, &inside, alpha).unwrap();
        let b = winkler(&band, &outside, alpha).unwrap();
        prop_assert!(coverage(&band, &inside).unwrap() > coverage(&band, &outside).unwrap());
        prop_assert!(a < b);
    }

    #[test]
    fn mse_matches_direct_sum(pred in prop::collection::vec(-5.0f64..5.0, 1..30)) {
        let truth: Vec<f64> = pred.iter().map(|p| p * 0.5 + 1.0).collect();
        let direct = pred.iter().zip(&truth).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / pred.len() as f64;
        prop_assert!((mse(&pred, &truth).unwrap() - direct).abs() <= 1e-12);
    }
}
