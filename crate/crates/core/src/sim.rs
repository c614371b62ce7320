//! Shock-contaminated functional time series generator.
//!
//! A path `Y = X + f + S` on `[0, n_periods]` is sliced into unit-period curves:
//! * `X` is stationary squared-exponential noise,
//! * `f` is one draw of a periodic Gaussian process, tiled with period 1,
//! * `S` switches on a periodic shock shape `Z` during periods where a two-state
//!   Markov chain is on, offset by a uniform time `u` so that each shock
//!   straddles two slices.
//!
//! Each component draws from its own ChaCha stream of the seed.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{FtsError, Result};
use crate::grid::FtsDataset;

const NOISE_STREAM: u64 = 1;
const PERIODIC_STREAM: u64 = 2;
const SHOCK_STREAM: u64 = 3;

const JITTERS: [f64; 5] = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShockModelParams {
    /// Expected proportion of periods touched by a shock, in `[0, 1)`.
    pub mu: f64,
    pub l_x: f64,
    pub l_f: f64,
    pub sigma_g_sq: f64,
    pub n_periods: usize,
    pub points_per_period: usize,
    pub seed: u64,
}

impl ShockModelParams {
    /// Parameters with `l_f = 1`, `l_X = 0.2`, `σ_g² = 10`.
    pub fn new(mu: f64, n_periods: usize, points_per_period: usize, seed: u64) -> Self {
        ShockModelParams { mu, l_x: 0.2, l_f: 1.0, sigma_g_sq: 10.0, n_periods, points_per_period, seed }
    }

    pub fn validate(&self) -> Result<()> {
        check_mu(self.mu)?;
        for (name, v) in [("l_x", self.l_x), ("l_f", self.l_f), ("sigma_g_sq", self.sigma_g_sq)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(FtsError::domain(format!("{name} = {v} must be positive")));
            }
        }
        if self.n_periods < 2 {
            return Err(FtsError::domain("at least two periods are required"));
        }
        check_ppp(self.points_per_period)
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if !(0.0..1.0).contains(&mu) {
        return Err(FtsError::domain(format!("mu = {mu} outside [0, 1)")));
    }
    Ok(())
}

fn check_ppp(ppp: usize) -> Result<()> {
    if ppp < 4 {
        return Err(FtsError::domain(format!("{ppp} points per period; at least 4 needed")));
    }
    Ok(())
}

/// Component paths and latent draws behind one generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub noise: Vec<f64>,
    /// The periodic function tiled over the full path.
    pub periodic: Vec<f64>,
    pub shock: Vec<f64>,
    /// Shock offset.
    pub u: f64,
    /// Markov states `x_0..x_{n_periods}`.
    pub states: Vec<u8>,
    /// `Z(0)`, which is zero by construction.
    pub shock_shape_origin: f64,
}

pub fn periodic_kernel(lag: f64, l_f: f64) -> f64 {
    let s = (std::f64::consts::PI * lag.abs()).sin();
    (-2.0 * s * s / (l_f * l_f)).exp()
}

pub fn squared_exponential_kernel(lag: f64, l_x: f64) -> f64 {
    (-lag * lag / (2.0 * l_x * l_x)).exp()
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn covariance(points: &[f64], kernel: impl Fn(f64) -> f64) -> DMatrix<f64> {
    DMatrix::from_fn(points.len(), points.len(), |i, j| kernel(points[i] - points[j]))
}

/// Lower Cholesky factor, adding diagonal jitter until the factorisation succeeds.
fn jittered_cholesky(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    for jitter in JITTERS {
        let mut m = cov.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += jitter;
        }
        if let Some(chol) = m.cholesky() {
            return Ok(chol.l());
        }
    }
    Err(FtsError::numeric("covariance not positive definite after jitter"))
}

fn normals(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// One period of the periodic process on `j / ppp`, `j = 0..ppp`.
pub fn sample_periodic_gp(l_f: f64, points_per_period: usize, seed: u64) -> Result<Vec<f64>> {
    check_ppp(points_per_period)?;
    let points: Vec<f64> = (0..points_per_period).map(|j| j as f64 / points_per_period as f64).collect();
    let l = jittered_cholesky(&covariance(&points, |d| periodic_kernel(d, l_f)))?;
    let mut rng = stream(seed, PERIODIC_STREAM);
    Ok((l * normals(&mut rng, points.len())).as_slice().to_vec())
}

/// Noise path on `j / ppp`, `j = 0..=n_periods * ppp`.
///
/// Generated one period at a time, each conditioned on the preceding period.
pub fn sample_noise_gp(l_x: f64, points_per_period: usize, n_periods: usize, seed: u64) -> Result<Vec<f64>> {
    check_ppp(points_per_period)?;
    let ppp = points_per_period;
    let total = n_periods * ppp + 1;
    let points: Vec<f64> = (0..2 * ppp).map(|j| j as f64 / ppp as f64).collect();
    let l = jittered_cholesky(&covariance(&points, |d| squared_exponential_kernel(d, l_x)))?;
    let l11 = l.view((0, 0), (ppp, ppp)).into_owned();
    let l21 = l.view((ppp, 0), (ppp, ppp)).into_owned();
    let l22 = l.view((ppp, ppp), (ppp, ppp)).into_owned();
    // R = L21 L11^{-1}, so that x_B = R x_W + L22 z
    let r = l11
        .transpose()
        .solve_upper_triangular(&l21.transpose())
        .ok_or_else(|| FtsError::numeric("singular conditioning factor"))?
        .transpose();

    let mut rng = stream(seed, NOISE_STREAM);
    let mut path: Vec<f64> = (&l * normals(&mut rng, 2 * ppp)).as_slice().to_vec();
    while path.len() < total {
        let window = DVector::from_column_slice(&path[path.len() - ppp..]);
        let block = &r * window + &l22 * normals(&mut rng, ppp);
        path.extend(block.iter());
    }
    path.truncate(total);
    Ok(path)
}

/// Shock path with its latent offset and chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ShockPath {
    pub path: Vec<f64>,
    pub u: f64,
    pub states: Vec<u8>,
    pub shock_shape_origin: f64,
}

/// Transition probability off → on for contamination level `mu`.
pub fn switch_probability(mu: f64) -> f64 {
    mu / (2.0 - mu)
}

pub fn sample_shock_process(
    mu: f64,
    sigma_g_sq: f64,
    l_f: f64,
    n_periods: usize,
    points_per_period: usize,
    seed: u64,
) -> Result<ShockPath> {
    check_mu(mu)?;
    check_ppp(points_per_period)?;
    let ppp = points_per_period;
    let rho = switch_probability(mu);
    let mut rng = stream(seed, SHOCK_STREAM);

    let u: f64 = rng.random();
    let mut states = vec![0u8; n_periods + 1];
    for i in 0..n_periods {
        if states[i] == 0 && rng.random::<f64>() < rho {
            states[i + 1] = 1;
        }
    }

    // g on the offset phases (j/ppp - u) mod 1, plus the origin last
    let mut phases: Vec<f64> = (0..ppp).map(|j| (j as f64 / ppp as f64 - u).rem_euclid(1.0)).collect();
    phases.push(0.0);
    let l = jittered_cholesky(&covariance(&phases, |d| periodic_kernel(d, l_f)))?;
    let g = l * normals(&mut rng, phases.len());
    let g0 = g[ppp];
    let shape_at = |gv: f64| sigma_g_sq * (gv * gv - g0 * g0);
    let shape: Vec<f64> = g.iter().take(ppp).map(|&gv| shape_at(gv)).collect();
    let shock_shape_origin = shape_at(g[ppp]);

    let total = n_periods * ppp + 1;
    let path = (0..total)
        .map(|k| {
            let shifted = k as f64 / ppp as f64 - u;
            if shifted < 0.0 {
                return 0.0;
            }
            let period = (shifted.floor() as usize).min(n_periods);
            if states[period] == 1 {
                shape[k % ppp]
            } else {
                0.0
            }
        })
        .collect();
    Ok(ShockPath { path, u, states, shock_shape_origin })
}

/// Sum the three components and slice the path into `n_periods` curves of
/// `points_per_period + 1` points each; neighbouring curves share an endpoint.
pub fn generate_fts(params: &ShockModelParams) -> Result<(FtsDataset, SimTrace)> {
    params.validate()?;
    let ppp = params.points_per_period;
    let n = params.n_periods;
    let noise = sample_noise_gp(params.l_x, ppp, n, params.seed)?;
    let period = sample_periodic_gp(params.l_f, ppp, params.seed)?;
    let shock = sample_shock_process(params.mu, params.sigma_g_sq, params.l_f, n, ppp, params.seed)?;

    let periodic: Vec<f64> = (0..noise.len()).map(|k| period[k % ppp]).collect();
    let total: Vec<f64> = noise
        .iter()
        .zip(&periodic)
        .zip(&shock.path)
        .map(|((x, f), s)| x + f + s)
        .collect();
    let rows = (0..n).map(|i| total[i * ppp..=(i + 1) * ppp].to_vec()).collect();
    let dataset = FtsDataset::from_rows(rows)?;
    let trace = SimTrace {
        noise,
        periodic,
        shock: shock.path,
        u: shock.u,
        states: shock.states,
        shock_shape_origin: shock.shock_shape_origin,
    };
    Ok((dataset, trace))
}

/// Which of the `n_periods` slices overlap an on-interval by a positive length.
///
/// State `x_j = 1` switches the shock on over `[j + u, j + 1 + u)`, which
/// touches slices `j` and `j + 1` (only `j` when `u = 0`).
pub fn affected_slices(trace: &SimTrace, n_periods: usize) -> Vec<bool> {
    let mut hit = vec![false; n_periods];
    for (j, &x) in trace.states.iter().enumerate() {
        if x == 0 {
            continue;
        }
        if j < n_periods {
            hit[j] = true;
        }
        if trace.u > 0.0 && j + 1 < n_periods {
            hit[j + 1] = true;
        }
    }
    hit
}
