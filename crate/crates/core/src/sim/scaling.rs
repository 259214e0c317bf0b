use super::Trajectory;
use crate::error::{Error, Result};
use crate::params::RNetwork;

const TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scaling {
    /// Time by `r^2`, amplitudes by `r^2`.
    Fluid,
    /// Time by `r^2`, amplitudes by `r`.
    Diffusion,
}

/// Centered primitives of a diffusion-scaled trajectory, one entry per epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionTerms {
    /// `r ((lambda_i/mu_i) t - Tbar_i(t))` for `i = 1, 2` and
    /// `r (t - Tbar_3(t))` for `i = 3`.
    pub alloc_deviation: Vec<[f64; 3]>,
    /// `A_hat`.
    pub arrivals: Vec<[f64; 2]>,
    /// `S_hat_j(Tbar_j)`.
    pub services: Vec<[f64; 3]>,
    /// `X_hat`.
    pub netput: Vec<[f64; 3]>,
}

/// A trajectory viewed in scaled time `t / r^2`.
///
/// `alloc` is always the fluid-scaled allocation `T / r^2`. `q`, `idle` and
/// `workload` are divided by `r^2` (fluid) or `r` (diffusion).
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledTrajectory {
    pub scaling: Scaling,
    pub r: f64,
    pub horizon: f64,
    pub times: Vec<f64>,
    pub q: Vec<[f64; 3]>,
    pub alloc: Vec<[f64; 3]>,
    pub idle: Vec<[f64; 2]>,
    pub workload: Vec<[f64; 2]>,
    pub diffusion: Option<DiffusionTerms>,
}

impl ScaledTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn scale_common(traj: &Trajectory, scaling: Scaling) -> ScaledTrajectory {
    let r2 = traj.r * traj.r;
    let amp = match scaling {
        Scaling::Fluid => r2,
        Scaling::Diffusion => traj.r,
    };
    let m = crate::workload::WorkloadMatrix::new(traj.mu_r);
    let q: Vec<[f64; 3]> = traj.epochs.iter().map(|e| e.q.map(|v| v as f64 / amp)).collect();
    ScaledTrajectory {
        scaling,
        r: traj.r,
        horizon: traj.horizon / r2,
        times: traj.epochs.iter().map(|e| e.time / r2).collect(),
        workload: q.iter().map(|&x| m.apply(x)).collect(),
        q,
        alloc: traj.epochs.iter().map(|e| e.alloc.map(|v| v / r2)).collect(),
        idle: traj.epochs.iter().map(|e| e.idle.map(|v| v / amp)).collect(),
        diffusion: None,
    }
}

pub fn fluid_scale(traj: &Trajectory) -> ScaledTrajectory {
    scale_common(traj, Scaling::Fluid)
}

/// Diffusion scaling together with the centered primitives and the netput
/// `X_hat`.
pub fn diffusion_scale(traj: &Trajectory, net: &RNetwork) -> ScaledTrajectory {
    let mut out = scale_common(traj, Scaling::Diffusion);
    let r = net.r;
    let [l1, l2] = net.limits.lambda;
    let [m1, m2, _] = net.limits.mu;
    let [l1r, l2r] = net.lambda_r;
    let [m1r, m2r, m3r] = net.mu_r;
    let fluid_rate = [l1 / m1, l2 / m2, 1.0];

    let n = traj.epochs.len();
    let mut terms = DiffusionTerms {
        alloc_deviation: Vec::with_capacity(n),
        arrivals: Vec::with_capacity(n),
        services: Vec::with_capacity(n),
        netput: Vec::with_capacity(n),
    };
    for e in &traj.epochs {
        let t = e.time;
        let c = e.counts.map(|v| v as f64);
        let a = [(c[0] - l1r * t) / r, (c[1] - l2r * t) / r];
        let s = [(c[2] - m1r * e.alloc[0]) / r, (c[3] - m2r * e.alloc[1]) / r, (c[4] - m3r * e.alloc[2]) / r];
        let x = [
            a[0] - s[0] + (l1r * t - m1r * fluid_rate[0] * t) / r,
            a[1] - s[1] + (l2r * t - m2r * fluid_rate[1] * t) / r,
            s[1] - s[2] + (m2r * fluid_rate[1] * t - m3r * t) / r,
        ];
        let dev = [0, 1, 2].map(|j| (fluid_rate[j] * t - e.alloc[j]) / r);
        terms.arrivals.push(a);
        terms.services.push(s);
        terms.netput.push(x);
        terms.alloc_deviation.push(dev);
    }
    out.diffusion = Some(terms);
    out
}

fn mismatch(epoch: usize, what: String) -> Error {
    Error::Conservation { epoch, what }
}

/// Check `W = M Q`, the queue representation through `X_hat` and the
/// workload representation `W = M X_hat + I_hat` at every epoch.
pub fn check_scaled_identities(scaled: &ScaledTrajectory, net: &RNetwork) -> Result<()> {
    let terms = scaled
        .diffusion
        .as_ref()
        .ok_or_else(|| Error::Domain("scaled identities need a diffusion-scaled trajectory".into()))?;
    let m = net.workload_matrix();
    let [m1r, m2r, m3r] = net.mu_r;
    for k in 0..scaled.len() {
        let q = scaled.q[k];
        if m.apply(q) != scaled.workload[k] {
            return Err(mismatch(k, format!("W_hat = {:?} differs from M Q_hat", scaled.workload[k])));
        }
        let x = terms.netput[k];
        let y = terms.alloc_deviation[k];
        let rebuilt = [x[0] + m1r * y[0], x[1] + m2r * y[1], x[2] + m3r * y[2] - m2r * y[1]];
        let scale = 1.0 + x.iter().chain(&y).fold(0.0f64, |a, v| a.max(v.abs() * m1r.max(m2r).max(m3r)));
        for i in 0..3 {
            if (rebuilt[i] - q[i]).abs() > TOL * scale {
                return Err(mismatch(k, format!("Q_hat{} = {} but X_hat gives {}", i + 1, q[i], rebuilt[i])));
            }
        }
        let mx = m.apply(x);
        for i in 0..2 {
            let rhs = mx[i] + scaled.idle[k][i];
            if (rhs - scaled.workload[k][i]).abs() > TOL * scale {
                return Err(mismatch(
                    k,
                    format!("W_hat{} = {} but M X_hat + I_hat = {rhs}", i + 1, scaled.workload[k][i]),
                ));
            }
        }
    }
    Ok(())
}
