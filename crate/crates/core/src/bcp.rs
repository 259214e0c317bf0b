//! Monte Carlo for the Brownian control problem through its pathwise
//! solution: reflect the two workload projections of the limit Brownian
//! motion and integrate the discounted effective cost.

use rand::RngCore;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::params::NetworkLimits;
use crate::rng::rng_for;
use crate::stats::mean_stderr;
use crate::workload::{effective_cost, effective_cost_value, skorohod_reflect, skorohod_regulator, Path};

/// The three-dimensional limit Brownian motion `X~`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitBm {
    pub drift: [f64; 3],
    pub cov: [[f64; 3]; 3],
    /// Lower-triangular, `chol chol' = cov`.
    pub chol: [[f64; 3]; 3],
}

/// Cholesky factor of a symmetric positive definite 3x3 matrix.
pub fn cholesky3(a: &[[f64; 3]; 3]) -> Result<[[f64; 3]; 3]> {
    let mut l = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if !(d > 0.0) {
                    return Err(domain(format!("matrix is not positive definite (pivot {i} = {d})")));
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    Ok(l)
}

impl LimitBm {
    pub fn new(limits: &NetworkLimits) -> Result<Self> {
        let [l1, l2] = limits.lambda;
        let [m1, m2, m3] = limits.mu;
        let [b1, b2, b3] = limits.b;
        let cov = [[2.0 * l1, 0.0, 0.0], [0.0, 2.0 * l2, -l2], [0.0, -l2, 2.0 * l2]];
        Ok(LimitBm { drift: [m1 * b1, m2 * b2, m3 * b3 - m2 * b2], chol: cholesky3(&cov)?, cov })
    }

    /// Rows `m1`, `m2` of the limit workload matrix.
    fn projection(limits: &NetworkLimits) -> [[f64; 3]; 2] {
        let [m1, m2, m3] = limits.mu;
        [[1.0 / m1, 1.0 / m2, 0.0], [0.0, 1.0 / m3, 1.0 / m3]]
    }

    /// Drift of `(m1'X~, m2'X~)`.
    pub fn workload_drift(&self, limits: &NetworkLimits) -> [f64; 2] {
        let p = Self::projection(limits);
        [0, 1].map(|i| (0..3).map(|k| p[i][k] * self.drift[k]).sum())
    }

    /// Covariance of `(m1'X~, m2'X~)` per unit time.
    pub fn workload_cov(&self, limits: &NetworkLimits) -> [[f64; 2]; 2] {
        let p = Self::projection(limits);
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = (0..3)
                    .flat_map(|a| (0..3).map(move |b| (a, b)))
                    .map(|(a, b)| p[i][a] * self.cov[a][b] * p[j][b])
                    .sum();
            }
        }
        out
    }
}

/// A source of independent standard normal draws.
pub trait GaussianSource {
    fn standard_normal(&mut self) -> f64;
}

impl<R: RngCore> GaussianSource for R {
    fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(self)
    }
}

/// How the running minimum of each workload projection is monitored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RbmScheme {
    /// Minimum over grid points only.
    #[default]
    Grid,
    /// Minimum over grid points and, per step, a sample of the Brownian
    /// bridge minimum between them.
    Bridge,
}

/// A discretized limit Brownian motion with its reflected workloads.
#[derive(Debug, Clone, PartialEq)]
pub struct RbmPath {
    pub dt: f64,
    pub n: usize,
    /// `X~` at the `n + 1` grid points.
    pub x: Vec<[f64; 3]>,
    pub w_star: [Vec<f64>; 2],
    pub v_star: [Vec<f64>; 2],
}

fn step_count(dt: f64, horizon: f64) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() || !(horizon >= dt) || !horizon.is_finite() {
        return Err(domain(format!("need 0 < dt <= horizon, got dt = {dt}, horizon = {horizon}")));
    }
    Ok(((horizon / dt).round() as usize).max(1))
}

/// Euler path of `X~` from seeded Gaussian draws, reflected on the grid.
pub fn simulate_rbm(limits: &NetworkLimits, dt: f64, horizon: f64, seed: u64) -> Result<RbmPath> {
    let mut rng = rng_for(seed, &[]);
    simulate_rbm_with(limits, dt, horizon, &mut rng)
}

/// As [`simulate_rbm`], drawing the Gaussian increments from `source`.
pub fn simulate_rbm_with<G: GaussianSource + ?Sized>(
    limits: &NetworkLimits,
    dt: f64,
    horizon: f64,
    source: &mut G,
) -> Result<RbmPath> {
    let n = step_count(dt, horizon)?;
    let bm = LimitBm::new(limits)?;
    let sq = dt.sqrt();
    let mut x = Vec::with_capacity(n + 1);
    let mut cur = [0.0f64; 3];
    x.push(cur);
    for _ in 0..n {
        let z = [source.standard_normal(), source.standard_normal(), source.standard_normal()];
        for i in 0..3 {
            let noise: f64 = (0..=i).map(|k| bm.chol[i][k] * z[k]).sum();
            cur[i] += bm.drift[i] * dt + sq * noise;
        }
        x.push(cur);
    }
    let p = LimitBm::projection(limits);
    let mut w_star: [Vec<f64>; 2] = Default::default();
    let mut v_star: [Vec<f64>; 2] = Default::default();
    for i in 0..2 {
        let proj: Vec<f64> = x.iter().map(|v| p[i][0] * v[0] + p[i][1] * v[1] + p[i][2] * v[2]).collect();
        let path = Path::uniform(dt, proj)?;
        w_star[i] = skorohod_reflect(&path)?.values;
        v_star[i] = skorohod_regulator(&path)?.values;
    }
    Ok(RbmPath { dt, n, x, w_star, v_star })
}

/// Optimal limiting queue lengths `Q~*` at every grid point of `path`.
pub fn optimal_queue_path(path: &RbmPath, limits: &NetworkLimits) -> Vec<[f64; 3]> {
    (0..=path.n)
        .map(|k| {
            effective_cost(limits, path.w_star[0][k], path.w_star[1][k]).expect("reflected workloads are nonnegative").z
        })
        .collect()
}

/// Rebuild the control `Y~*` of the pathwise solution and verify it is
/// admissible: queues nonnegative and matching [`optimal_queue_path`],
/// `I~1 = Y~1 + Y~2 = V~1*`, `I~2 = Y~3 = V~2*`, both nondecreasing from 0.
pub fn audit_admissibility(path: &RbmPath, limits: &NetworkLimits) -> Result<()> {
    const TOL: f64 = 1e-9;
    let [m1, m2, m3] = limits.mu;
    let queues = optimal_queue_path(path, limits);
    let fail = |k: usize, what: String| Error::Conservation { epoch: k, what };
    let mut prev_i = [0.0f64; 2];
    for k in 0..=path.n {
        let [x1, x2, x3] = path.x[k];
        let (w1, w2) = (path.w_star[0][k], path.w_star[1][k]);
        let (v1, v2) = (path.v_star[0][k], path.v_star[1][k]);
        let (y1, y2) = if m3 * w2 >= m2 * w1 {
            (-x1 / m1, x1 / m1 + v1)
        } else {
            (-x3 / m2 + v1 - m3 / m2 * v2, x3 / m2 + m3 / m2 * v2)
        };
        let y3 = v2;
        let q = [x1 + m1 * y1, x2 + m2 * y2, x3 + m3 * y3 - m2 * y2];
        let scale = 1.0 + q.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for i in 0..3 {
            if q[i] < -TOL * scale {
                return Err(fail(k, format!("Q~{} = {} is negative", i + 1, q[i])));
            }
            if (q[i] - queues[k][i]).abs() > TOL * scale {
                return Err(fail(k, format!("Q~{} = {} but the workload form gives {}", i + 1, q[i], queues[k][i])));
            }
        }
        let idle = [y1 + y2, y3];
        for i in 0..2 {
            if (idle[i] - path.v_star[i][k]).abs() > TOL * scale {
                return Err(fail(
                    k,
                    format!("I~{} = {} differs from V~{}* = {}", i + 1, idle[i], i + 1, path.v_star[i][k]),
                ));
            }
            let start = if k == 0 { 0.0 } else { prev_i[i] };
            if idle[i] < start - TOL * scale {
                return Err(fail(k, format!("I~{} decreased", i + 1)));
            }
        }
        prev_i = idle;
    }
    Ok(())
}

/// A Monte Carlo estimate of a discounted functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostEstimate {
    pub mean: f64,
    /// `None` with fewer than two samples.
    pub stderr: Option<f64>,
    pub n_paths: usize,
    pub horizon: f64,
    /// Bound on the discounted mass beyond `horizon`.
    pub truncation_bound: f64,
}

impl CostEstimate {
    pub fn from_samples(xs: &[f64], horizon: f64, truncation_bound: f64) -> Self {
        let (mean, stderr) = mean_stderr(xs);
        CostEstimate { mean, stderr, n_paths: xs.len(), horizon, truncation_bound }
    }

    pub fn stderr_or_zero(&self) -> f64 {
        self.stderr.unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcpConfig {
    pub dt: f64,
    pub horizon: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub scheme: RbmScheme,
}

impl BcpConfig {
    /// `dt = 1e-3`, `horizon = 15 / gamma`, `1e5` paths, bridge monitoring.
    pub fn defaults(limits: &NetworkLimits, seed: u64) -> Self {
        BcpConfig { dt: 1e-3, horizon: 15.0 / limits.gamma, n_paths: 100_000, seed, scheme: RbmScheme::Bridge }
    }
}

/// `J*` together with the discounted workload marginals
/// `E int e^{-gamma t} W~i*(t) dt`, all from the same paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BcpEstimate {
    pub j_star: CostEstimate,
    pub workload: [CostEstimate; 2],
    pub dt: f64,
}

/// Upper bound on `int_H^inf e^{-gamma t} E[c . W~*(t)] dt`, from
/// `E W~i*(t) <= |drift_i| t + sigma_i sqrt(2 t / pi)`.
pub fn truncation_bound(limits: &NetworkLimits, weights: [f64; 2], horizon: f64) -> Result<f64> {
    let bm = LimitBm::new(limits)?;
    let drift = bm.workload_drift(limits);
    let cov = bm.workload_cov(limits);
    let g = limits.gamma;
    let tail = (-g * horizon).exp();
    let lin = tail * (horizon / g + 1.0 / (g * g));
    let root = tail * (horizon.sqrt() / g + std::f64::consts::PI.sqrt() / (2.0 * g.powf(1.5)));
    let k = (2.0 / std::f64::consts::PI).sqrt();
    Ok((0..2).map(|i| weights[i] * (drift[i].abs() * lin + cov[i][i].sqrt() * k * root)).sum())
}

/// Coefficients bounding the effective cost by a linear form in `w`.
fn cost_envelope(limits: &NetworkLimits) -> [f64; 2] {
    let [h1, h2, h3] = limits.h;
    let [m1, m2, m3] = limits.mu;
    [(h2 * m2 - h3 * m2).max(h1 * m1), (h3 * m3).max(m3 / m2 * (h2 * m2 - h1 * m1))]
}

struct Workload2d {
    drift: [f64; 2],
    chol: [[f64; 2]; 2],
    var: [f64; 2],
}

impl Workload2d {
    fn new(limits: &NetworkLimits) -> Result<Self> {
        let bm = LimitBm::new(limits)?;
        let c = bm.workload_cov(limits);
        let l00 = c[0][0].sqrt();
        let l10 = c[1][0] / l00;
        let d = c[1][1] - l10 * l10;
        if !(d > 0.0) {
            return Err(domain("workload covariance is singular"));
        }
        Ok(Workload2d {
            drift: bm.workload_drift(limits),
            chol: [[l00, 0.0], [l10, d.sqrt()]],
            var: [c[0][0], c[1][1]],
        })
    }
}

// One path's discounted integrals of [h_hat(W*), W1*, W2*]. The two
// workload projections are a 2-d Brownian motion, simulated directly.
fn discounted_path<R: RngCore>(
    limits: &NetworkLimits,
    wl: &Workload2d,
    weights: &[f64],
    dt: f64,
    scheme: RbmScheme,
    rng: &mut R,
) -> [f64; 3] {
    let sq = dt.sqrt();
    let mut y = [0.0f64; 2];
    let mut lo = [0.0f64; 2];
    let mut acc = [0.0f64; 3];
    for &wk in weights {
        let w = [y[0] - lo[0], y[1] - lo[1]];
        acc[0] += wk * effective_cost_value(limits, w[0], w[1]);
        acc[1] += wk * w[0];
        acc[2] += wk * w[1];

        let z0: f64 = StandardNormal.sample(rng);
        let z1: f64 = StandardNormal.sample(rng);
        let next = [
            y[0] + wl.drift[0] * dt + sq * wl.chol[0][0] * z0,
            y[1] + wl.drift[1] * dt + sq * (wl.chol[1][0] * z0 + wl.chol[1][1] * z1),
        ];
        for i in 0..2 {
            if scheme == RbmScheme::Bridge {
                let s2dt = wl.var[i] * dt;
                let (a, b, m) = (y[i], next[i], lo[i]);
                let e_min = 2.0 * (a - m) * (b - m) / s2dt;
                // P(bridge dips below m) = exp(-e_min)
                if e_min < 50.0 {
                    let e: f64 = Exp1.sample(rng);
                    if e >= e_min {
                        let dip = 0.5 * (a + b - ((b - a) * (b - a) + 2.0 * s2dt * e).sqrt());
                        lo[i] = lo[i].min(dip);
                    }
                }
            }
            lo[i] = lo[i].min(next[i]);
        }
        y = next;
    }
    acc
}

/// Discounted `h_hat(W~*)` and workload marginals over `[0, horizon]`,
/// averaged over independent paths. Each path draws from its own seeded
/// stream, so the result does not depend on the thread count.
pub fn estimate_bcp(limits: &NetworkLimits, cfg: &BcpConfig) -> Result<BcpEstimate> {
    let n = step_count(cfg.dt, cfg.horizon)?;
    if cfg.n_paths == 0 {
        return Err(domain("need at least one path"));
    }
    let wl = Workload2d::new(limits)?;
    let g = limits.gamma;
    let step_mass = -(-g * cfg.dt).exp_m1() / g;
    let weights: Vec<f64> = (0..n).map(|k| (-g * k as f64 * cfg.dt).exp() * step_mass).collect();
    let horizon = n as f64 * cfg.dt;

    let samples: Vec<[f64; 3]> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let mut rng = rng_for(cfg.seed, &[p]);
            discounted_path(limits, &wl, &weights, cfg.dt, cfg.scheme, &mut rng)
        })
        .collect();

    let column = |j: usize| -> Vec<f64> { samples.iter().map(|s| s[j]).collect() };
    Ok(BcpEstimate {
        j_star: CostEstimate::from_samples(
            &column(0),
            horizon,
            truncation_bound(limits, cost_envelope(limits), horizon)?,
        ),
        workload: [
            CostEstimate::from_samples(&column(1), horizon, truncation_bound(limits, [1.0, 0.0], horizon)?),
            CostEstimate::from_samples(&column(2), horizon, truncation_bound(limits, [0.0, 1.0], horizon)?),
        ],
        dt: cfg.dt,
    })
}

/// `J* = E int_0^inf e^{-gamma t} h_hat(W~*(t)) dt`, truncated at `horizon`.
pub fn estimate_j_star(
    limits: &NetworkLimits,
    dt: f64,
    horizon: f64,
    n_paths: usize,
    seed: u64,
) -> Result<CostEstimate> {
    let cfg = BcpConfig { dt, horizon, n_paths, seed, scheme: RbmScheme::Bridge };
    Ok(estimate_bcp(limits, &cfg)?.j_star)
}
