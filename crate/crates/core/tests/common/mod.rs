//! Independent reference implementations used by the integration tests.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random curves; with `ties` the values are rounded to a coarse lattice so
/// that many grid values coincide.
pub fn random_curves(rng: &mut ChaCha8Rng, n: usize, m: usize, ties: bool) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..m)
                .map(|_| {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    if ties {
                        (v * 3.0).round() / 3.0
                    } else {
                        v
                    }
                })
                .collect()
        })
        .collect()
}

pub fn as_slices(curves: &[Vec<f64>]) -> Vec<&[f64]> {
    curves.iter().map(|c| c.as_slice()).collect()
}

/// Pairwise modified band depth of `y` in `reference`, in floating point.
pub fn pairwise_mbd(y: &[f64], reference: &[&[f64]]) -> f64 {
    let n = reference.len();
    let mut total = 0.0;
    let mut pairs = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            let inside = (0..y.len())
                .filter(|&t| {
                    let lo = reference[a][t].min(reference[b][t]);
                    let hi = reference[a][t].max(reference[b][t]);
                    lo <= y[t] && y[t] <= hi
                })
                .count();
            total += inside as f64 / y.len() as f64;
            pairs += 1.0;
        }
    }
    total / pairs
}

/// Integer numerator and denominator of the pairwise depth of `y` in `reference`.
fn pairwise_counts(y: &[f64], reference: &[&[f64]]) -> (u128, u128) {
    let n = reference.len();
    let mut hits = 0u128;
    let mut trials = 0u128;
    for a in 0..n {
        for b in a + 1..n {
            for t in 0..y.len() {
                let lo = reference[a][t].min(reference[b][t]);
                let hi = reference[a][t].max(reference[b][t]);
                if lo <= y[t] && y[t] <= hi {
                    hits += 1;
                }
                trials += 1;
            }
        }
    }
    (hits, trials)
}

fn enveloped(set: &[&[f64]], f: &[f64]) -> usize {
    (0..f.len())
        .filter(|&t| {
            let lo = set.iter().map(|c| c[t]).fold(f64::INFINITY, f64::min);
            let hi = set.iter().map(|c| c[t]).fold(f64::NEG_INFINITY, f64::max);
            lo <= f[t] && f[t] <= hi
        })
        .count()
}

/// Step-by-step envelope construction over past focal curves `ys` with
/// squared distances `d`. Depth with fewer than two reference members is
/// replaced by the envelopment fraction, and the empty set has depth 0.
/// Returns accepted curve indices in acceptance order and the depth trace.
pub fn literal_envelope(ys: &[&[f64]], d: &[f64], f: &[f64]) -> (Vec<usize>, Vec<f64>) {
    let depth = |set: &[usize]| -> (u128, u128) {
        match set.len() {
            0 => (0, 1),
            1 => (enveloped(&[ys[set[0]]], f) as u128, f.len() as u128),
            _ => {
                let mut reference: Vec<&[f64]> = set.iter().map(|&i| ys[i]).collect();
                reference.push(f);
                pairwise_counts(f, &reference)
            }
        }
    };
    let geq = |a: (u128, u128), b: (u128, u128)| a.0 * b.1 >= b.0 * a.1;

    let mut pool: Vec<usize> = (0..ys.len()).collect();
    let mut envelope: Vec<usize> = Vec::new();
    let mut current = (0u128, 1u128);
    let mut trace = Vec::new();
    while pool.len() >= 2 {
        // nearest first, ties to the earlier curve
        pool.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
        let mut batch = vec![pool[0]];
        for &y in &pool[1..] {
            let before: Vec<&[f64]> = batch.iter().map(|&i| ys[i]).collect();
            let mut after = before.clone();
            after.push(ys[y]);
            if enveloped(&after, f) > enveloped(&before, f) {
                batch.push(y);
            }
        }
        let mut union = envelope.clone();
        union.extend(&batch);
        let candidate = depth(&union);
        if geq(candidate, current) {
            envelope = union;
            current = candidate;
            trace.push(current.0 as f64 / current.1 as f64);
        }
        pool.retain(|i| !batch.contains(i));
    }
    (envelope, trace)
}

/// Squared L2 distance between the linear interpolants of `a` and `b` on a
/// uniform grid over [0, 1], by composite trapezoid on `fine` points.
pub fn fine_l2_sq(a: &[f64], b: &[f64], fine: usize) -> f64 {
    let m = a.len();
    let eval = |c: &[f64], t: f64| {
        let x = t * (m - 1) as f64;
        let i = (x.floor() as usize).min(m - 2);
        let w = x - i as f64;
        c[i] * (1.0 - w) + c[i + 1] * w
    };
    let h = 1.0 / (fine - 1) as f64;
    let mut total = 0.0;
    for j in 0..fine {
        let t = j as f64 * h;
        let e = eval(a, t) - eval(b, t);
        let w = if j == 0 || j == fine - 1 { 0.5 } else { 1.0 };
        total += w * e * e;
    }
    total * h
}

/// Scalar least squares `s_t = c + b s_{t-1}`, then one-step prediction.
pub fn scalar_ar1_forecast(s: &[f64]) -> f64 {
    let x = &s[..s.len() - 1];
    let y = &s[1..];
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    intercept + slope * s[s.len() - 1]
}

/// Trapezoid inner product on a uniform grid over [0, 1].
pub fn trapezoid_inner(a: &[f64], b: &[f64]) -> f64 {
    let m = a.len();
    let h = 1.0 / (m - 1) as f64;
    (0..m)
        .map(|i| {
            let w = if i == 0 || i == m - 1 { 0.5 } else { 1.0 };
            w * a[i] * b[i]
        })
        .sum::<f64>()
        * h
}

/// Rank-1 series `mean + a_i φ` with `a_i` a scalar AR(1).
pub fn rank_one_ar(n: usize, m: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let mut r = rng(seed);
    let grid: Vec<f64> = (0..m).map(|j| j as f64 / (m - 1) as f64).collect();
    let phi: Vec<f64> = grid.iter().map(|t| (2.0 * std::f64::consts::PI * t).sin() + 0.3).collect();
    let mean: Vec<f64> = grid.iter().map(|t| 1.0 + t * t).collect();
    let mut a = 0.0;
    let rows = (0..n)
        .map(|_| {
            a = 0.5 + 0.7 * a + r.random_range(-1.0..1.0);
            mean.iter().zip(&phi).map(|(mu, p)| mu + a * p).collect()
        })
        .collect();
    (rows, phi, mean)
}
