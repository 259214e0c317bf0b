use rayon::prelude::*;
use serde::Serialize;

use super::cost::replication_seed;
use crate::error::{domain, Result};
use crate::params::{kappa_for, RNetwork, ThresholdConstants};
use crate::policy::PolicyKind;
use crate::sim::{diffusion_scale, simulate, ScaledTrajectory, Scaling};
use crate::stats::Estimate;

/// State-space-collapse and idle-time diagnostics of one diffusion-scaled
/// threshold-policy path over `[0, t_end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    /// `sup Q1 1{Q3 - (mu2/mu1) Q1 >= L/r}`.
    pub collapse_sup1: f64,
    /// `sup Q3 1{Q3 - (mu2/mu1) Q1 < L/r}`.
    pub collapse_sup3: f64,
    /// Whether either collapse supremum exceeds `event_level`.
    pub event_e_hit: bool,
    pub kappa: f64,
    /// `kappa (C - L + 1) / r`.
    pub event_level: f64,
    /// Server 2 idle time accrued while `Q2 >= d ell0 ln r / r`.
    pub idle_mass_y: f64,
    /// All server 2 idle time accrued on `[0, t_end)`.
    pub idle_total: f64,
    /// `sup Q1 Q3`.
    pub product_sup: f64,
}

/// Diagnostics of a diffusion-scaled path. `kappa` is chosen for the `c` the
/// network was built with; `d` scales the buffer-2 level of the idle-time
/// integral.
pub fn run_diagnostics(
    scaled: &ScaledTrajectory,
    net: &RNetwork,
    constants: &ThresholdConstants,
    d: f64,
    t_end: f64,
) -> Result<DiagnosticsReport> {
    if scaled.scaling != Scaling::Diffusion {
        return Err(domain("diagnostics need a diffusion-scaled path"));
    }
    if !(t_end >= 0.0) {
        return Err(domain(format!("t_end must be >= 0, got {t_end}")));
    }
    let r = net.r;
    let lower = net.lower as f64 / r;
    let weight = net.switch_weight();
    let kappa = kappa_for(&net.limits, net.c, constants.theta3);
    let event_level = kappa * (net.upper as f64 - net.lower as f64 + 1.0) / r;
    let q2_level = d * net.ell0 * r.ln() / r;

    let (mut sup1, mut sup3, mut prod, mut y, mut idle) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let n = scaled.len();
    for k in 0..n {
        let t = scaled.times[k];
        if t > t_end {
            break;
        }
        let [q1, q2, q3] = scaled.q[k];
        if q3 - weight * q1 >= lower {
            sup1 = sup1.max(q1);
        } else {
            sup3 = sup3.max(q3);
        }
        prod = prod.max(q1 * q3);
        if k + 1 < n && t < t_end {
            let next = scaled.times[k + 1];
            let frac = ((t_end.min(next) - t) / (next - t)).min(1.0);
            let inc = (scaled.idle[k + 1][1] - scaled.idle[k][1]) * frac;
            idle += inc;
            if q2 >= q2_level {
                y += inc;
            }
        }
    }
    Ok(DiagnosticsReport {
        collapse_sup1: sup1,
        collapse_sup3: sup3,
        event_e_hit: sup1 > event_level || sup3 > event_level,
        kappa,
        event_level,
        idle_mass_y: y,
        idle_total: idle,
        product_sup: prod,
    })
}

/// `sup_{s <= t_end} max_j |Tbar_j(s) - Tbar*_j(s)|` with the fluid
/// allocation `Tbar*(s) = (lambda1/mu1 s, lambda2/mu2 s, s)`.
pub fn fluid_deviation(scaled: &ScaledTrajectory, net: &RNetwork, t_end: f64) -> f64 {
    let [l1, l2] = net.limits.lambda;
    let [m1, m2, _] = net.limits.mu;
    let rate = [l1 / m1, l2 / m2, 1.0];
    scaled
        .times
        .iter()
        .zip(&scaled.alloc)
        .take_while(|(t, _)| **t <= t_end)
        .map(|(t, a)| (0..3).map(|j| (a[j] - rate[j] * t).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max)
}

/// The explicit part `(1 + r^4 t^2) r^{-theta3 (c - 1) ell0}` of the bound on
/// the collapse-event probability. Only informative below 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailBound {
    pub value: f64,
    pub informative: bool,
}

pub fn theorem_bound(constants: &ThresholdConstants, net: &RNetwork, t: f64) -> TailBound {
    let r = net.r;
    let value = (1.0 + r.powi(4) * t * t) * r.powf(-constants.theta3 * (net.c - 1.0) * net.ell0);
    TailBound { value, informative: value < 1.0 }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticsSummary {
    pub r: f64,
    pub n_reps: usize,
    pub t_end: f64,
    pub collapse_sup1: Estimate,
    pub collapse_sup3: Estimate,
    pub idle_mass_y: Estimate,
    pub product_sup: Estimate,
    pub event_frequency: f64,
    pub event_level: f64,
    pub bound: TailBound,
    pub fluid_deviation: Estimate,
    /// Largest `Y - I2(t_end)` over replications; never positive.
    pub max_y_excess: f64,
}

/// Monte Carlo means of the diagnostics over `n_reps` threshold-policy
/// replications of length `t_end` (scaled).
pub fn diagnostics_batch(
    net: &RNetwork,
    constants: &ThresholdConstants,
    d: f64,
    t_end: f64,
    n_reps: usize,
    seed: u64,
) -> Result<DiagnosticsSummary> {
    if n_reps == 0 {
        return Err(domain("need at least one replication"));
    }
    let policy = PolicyKind::Threshold.build(net);
    let horizon = net.r * net.r * t_end;
    let reports: Vec<(DiagnosticsReport, f64)> = (0..n_reps as u64)
        .into_par_iter()
        .map(|rep| {
            let tr = simulate(net, &policy, horizon, replication_seed(seed, rep))?;
            let scaled = diffusion_scale(&tr, net);
            Ok((run_diagnostics(&scaled, net, constants, d, t_end)?, fluid_deviation(&scaled, net, t_end)))
        })
        .collect::<Result<_>>()?;
    let col = |f: fn(&DiagnosticsReport) -> f64| -> Estimate {
        Estimate::from_samples(&reports.iter().map(|(r, _)| f(r)).collect::<Vec<_>>())
    };
    Ok(DiagnosticsSummary {
        r: net.r,
        n_reps,
        t_end,
        collapse_sup1: col(|r| r.collapse_sup1),
        collapse_sup3: col(|r| r.collapse_sup3),
        idle_mass_y: col(|r| r.idle_mass_y),
        product_sup: col(|r| r.product_sup),
        event_frequency: reports.iter().filter(|(r, _)| r.event_e_hit).count() as f64 / n_reps as f64,
        event_level: reports[0].0.event_level,
        bound: theorem_bound(constants, net, t_end),
        fluid_deviation: Estimate::from_samples(&reports.iter().map(|(_, f)| *f).collect::<Vec<_>>()),
        max_y_excess: reports.iter().map(|(r, _)| r.idle_mass_y - r.idle_total).fold(f64::NEG_INFINITY, f64::max),
    })
}
