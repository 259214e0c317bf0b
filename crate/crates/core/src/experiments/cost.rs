use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::bcp::{estimate_bcp, BcpConfig, CostEstimate};
use crate::error::{domain, Result};
use crate::params::{compute_threshold_constants, make_r_network, DriftMode, NetworkLimits, RNetwork};
use crate::policy::PolicyKind;
use crate::rng::derive_seed;
use crate::sim::{diffusion_scale, simulate, ScaledTrajectory, Scaling};
use crate::stats::Estimate;

const SIM_LABEL: u64 = 1;
const BCP_LABEL: u64 = 2;

/// Discounted cost of one path over its horizon, with the tail proxy
/// `e^{-gamma T} h.Q(T) / gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathCost {
    pub integral: f64,
    pub tail: f64,
}

fn dot(h: [f64; 3], q: [f64; 3]) -> f64 {
    h[0] * q[0] + h[1] * q[1] + h[2] * q[2]
}

/// `int_a^b e^{-gamma t} dt`.
fn discount_mass(gamma: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    (-gamma * a).exp() * -(-gamma * (b - a)).exp_m1() / gamma
}

/// `int_a^b e^{-gamma t} h.Q(t) dt` for the piecewise-constant scaled path.
pub(crate) fn discounted_cost_between(scaled: &ScaledTrajectory, h: [f64; 3], gamma: f64, a: f64, b: f64) -> f64 {
    let n = scaled.len();
    let mut total = 0.0;
    for k in 0..n {
        let start = scaled.times[k].max(a);
        let end = if k + 1 < n { scaled.times[k + 1] } else { scaled.horizon.max(scaled.times[k]) }.min(b);
        if end > start {
            total += dot(h, scaled.q[k]) * discount_mass(gamma, start, end);
        }
    }
    total
}

/// Exact discounted holding cost of a diffusion-scaled path up to its
/// horizon.
pub fn discounted_cost(scaled: &ScaledTrajectory, h: [f64; 3], gamma: f64) -> Result<PathCost> {
    if scaled.scaling != Scaling::Diffusion {
        return Err(domain("discounted cost is defined on diffusion-scaled paths"));
    }
    if !(gamma > 0.0) {
        return Err(domain(format!("discount rate must be > 0, got {gamma}")));
    }
    let end = scaled.horizon.max(*scaled.times.last().unwrap_or(&0.0));
    let integral = discounted_cost_between(scaled, h, gamma, 0.0, end);
    let last = scaled.q.last().copied().unwrap_or([0.0; 3]);
    Ok(PathCost { integral, tail: (-gamma * end).exp() * dot(h, last) / gamma })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub lower: u64,
    pub upper: u64,
    pub ell0: f64,
    pub c: f64,
}

/// Monte Carlo estimate of the discounted cost of one policy on one network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscountedCostRun {
    pub r: f64,
    pub policy: PolicyKind,
    /// `horizon` is in scaled time; `truncation_bound` is the mean tail proxy.
    pub estimate: CostEstimate,
    pub thresholds: Thresholds,
}

/// Replication `rep` of an experiment seeded with `seed`. The same seed is
/// used for every policy and every r, so arrival streams are shared.
pub(crate) fn replication_seed(seed: u64, rep: u64) -> u64 {
    derive_seed(seed, &[SIM_LABEL, rep])
}

/// Simulate `n_reps` replications of `net` under `policy` over scaled time
/// `[0, horizon_scaled]` and average their discounted costs.
pub fn estimate_cost(
    net: &RNetwork,
    policy: PolicyKind,
    horizon_scaled: f64,
    n_reps: usize,
    seed: u64,
) -> Result<DiscountedCostRun> {
    if n_reps == 0 {
        return Err(domain("need at least one replication"));
    }
    if !(horizon_scaled > 0.0) || !horizon_scaled.is_finite() {
        return Err(domain(format!("horizon must be finite and > 0, got {horizon_scaled}")));
    }
    let gamma = net.limits.gamma;
    if gamma * horizon_scaled < 10.0 {
        log::warn!("gamma * horizon = {} < 10: truncation is coarse", gamma * horizon_scaled);
    }
    let p = policy.build(net);
    let horizon = net.r * net.r * horizon_scaled;
    let costs: Vec<PathCost> = (0..n_reps as u64)
        .into_par_iter()
        .map(|rep| {
            let tr = simulate(net, &p, horizon, replication_seed(seed, rep))?;
            discounted_cost(&diffusion_scale(&tr, net), net.limits.h, gamma)
        })
        .collect::<Result<_>>()?;
    let integrals: Vec<f64> = costs.iter().map(|c| c.integral).collect();
    let tail = costs.iter().map(|c| c.tail).sum::<f64>() / n_reps as f64;
    Ok(DiscountedCostRun {
        r: net.r,
        policy,
        estimate: CostEstimate::from_samples(&integrals, horizon_scaled, tail),
        thresholds: Thresholds { lower: net.lower, upper: net.upper, ell0: net.ell0, c: net.c },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub ell0: f64,
    pub c: f64,
    /// Scaled horizon of each replication.
    pub horizon: f64,
    pub replications: usize,
    pub seed: u64,
    pub bcp: BcpConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub run: DiscountedCostRun,
    /// `(J_hat - J*) / J*`.
    pub gap: f64,
    /// Delta-method standard error of `gap`.
    pub gap_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub j_star: CostEstimate,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// `|gap|` of `policy` in increasing order of r.
    pub fn abs_gaps(&self, policy: PolicyKind) -> Vec<Estimate> {
        self.rows
            .iter()
            .filter(|row| row.run.policy == policy)
            .map(|row| Estimate::new(row.gap.abs(), row.gap_stderr))
            .collect()
    }

    pub fn row(&self, r: f64, policy: PolicyKind) -> Option<&SweepRow> {
        self.rows.iter().find(|row| row.run.r == r && row.run.policy == policy)
    }

    /// CSV with columns `r, policy, Jhat, stderr, Jstar, gap`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["r", "policy", "Jhat", "stderr", "Jstar", "gap"])?;
        for row in &self.rows {
            let e = &row.run.estimate;
            w.write_record([
                row.run.r.to_string(),
                row.run.policy.to_string(),
                e.mean.to_string(),
                e.stderr.map(|s| s.to_string()).unwrap_or_default(),
                self.j_star.mean.to_string(),
                row.gap.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_sweep_inputs(policies: &[PolicyKind], r_list: &[f64]) -> Result<()> {
    if r_list.len() < 2 {
        return Err(domain(format!("a convergence sweep needs at least two values of r, got {}", r_list.len())));
    }
    if r_list.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(domain("r values must be strictly increasing"));
    }
    if policies.is_empty() {
        return Err(domain("no policies to sweep"));
    }
    Ok(())
}

/// Estimate `J*` and the discounted cost of every policy at every r, and
/// report the relative gap to `J*`.
pub fn convergence_sweep(
    limits: &NetworkLimits,
    policies: &[PolicyKind],
    r_list: &[f64],
    cfg: &SweepConfig,
) -> Result<SweepTable> {
    check_sweep_inputs(policies, r_list)?;
    let bcp = BcpConfig { seed: derive_seed(cfg.seed, &[BCP_LABEL]), ..cfg.bcp };
    let j_star = estimate_bcp(limits, &bcp)?.j_star;
    sweep_against(limits, policies, r_list, cfg, j_star)
}

/// As [`convergence_sweep`] with a `J*` estimate supplied by the caller;
/// `cfg.bcp` is ignored.
pub fn sweep_against(
    limits: &NetworkLimits,
    policies: &[PolicyKind],
    r_list: &[f64],
    cfg: &SweepConfig,
    j_star: CostEstimate,
) -> Result<SweepTable> {
    check_sweep_inputs(policies, r_list)?;
    if let Ok(k) = compute_threshold_constants(*limits) {
        if cfg.ell0 < k.ell_bar {
            log::warn!("ell0 = {} is below the level {:.4e} that the optimality theory asks for", cfg.ell0, k.ell_bar);
        }
    }
    let js = j_star.mean;
    let js_se = j_star.stderr_or_zero();

    let mut rows = Vec::new();
    for &r in r_list {
        let net = make_r_network(*limits, r, cfg.ell0, cfg.c, DriftMode::Constant)?;
        for &policy in policies {
            let run = estimate_cost(&net, policy, cfg.horizon, cfg.replications, cfg.seed)?;
            let jh = run.estimate.mean;
            let se = run.estimate.stderr_or_zero();
            let gap = (jh - js) / js;
            let gap_stderr = (se * se + (jh / js).powi(2) * js_se * js_se).sqrt() / js;
            rows.push(SweepRow { run, gap, gap_stderr });
        }
    }
    Ok(SweepTable { j_star, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(times: Vec<f64>, q: Vec<[f64; 3]>, horizon: f64) -> ScaledTrajectory {
        let n = times.len();
        ScaledTrajectory {
            scaling: Scaling::Diffusion,
            r: 1.0,
            horizon,
            times,
            q,
            alloc: vec![[0.0; 3]; n],
            idle: vec![[0.0; 2]; n],
            workload: vec![[0.0; 2]; n],
            diffusion: None,
        }
    }

    const H: [f64; 3] = [1.0, 1.0, 1.0];

    #[test]
    fn constant_path() {
        let p = path(vec![0.0], vec![[1.0, 2.0, 0.5]], 7.0);
        let c = discounted_cost(&p, H, 0.5).unwrap();
        let expect = 3.5 * (1.0 - (-3.5f64).exp()) / 0.5;
        assert!((c.integral - expect).abs() < 1e-12);
        assert!((c.tail - (-3.5f64).exp() * 3.5 / 0.5).abs() < 1e-12);
    }

    #[test]
    fn empty_path_costs_nothing() {
        let p = path(vec![0.0, 1.0, 4.0], vec![[0.0; 3]; 3], 4.0);
        assert_eq!(discounted_cost(&p, H, 1.0).unwrap(), PathCost { integral: 0.0, tail: 0.0 });
    }

    #[test]
    fn two_epoch_path() {
        let p = path(vec![0.0, 1.0], vec![[1.0, 0.0, 0.0], [0.0; 3]], 30.0);
        let c = discounted_cost(&p, H, 1.0).unwrap();
        assert!((c.integral - 0.632_120_558_828_557_7).abs() < 1e-12);
    }

    #[test]
    fn additive_over_segments() {
        let p = path(
            vec![0.0, 0.3, 1.1, 2.0],
            vec![[1.0, 0.0, 2.0], [0.5, 1.0, 0.0], [3.0, 0.0, 0.0], [0.0, 0.2, 0.1]],
            5.0,
        );
        let whole = discounted_cost_between(&p, [1.0, 2.0, 3.0], 0.7, 0.0, 5.0);
        let split: f64 = [0.0, 0.2, 0.3, 1.7, 2.5, 5.0]
            .windows(2)
            .map(|w| discounted_cost_between(&p, [1.0, 2.0, 3.0], 0.7, w[0], w[1]))
            .sum();
        assert!((whole - split).abs() < 1e-12);
    }

    #[test]
    fn fluid_paths_are_rejected() {
        let mut p = path(vec![0.0], vec![[0.0; 3]], 1.0);
        p.scaling = Scaling::Fluid;
        assert!(discounted_cost(&p, H, 1.0).is_err());
    }

    #[test]
    fn sweep_needs_two_points() {
        let l = NetworkLimits::example();
        let cfg =
            SweepConfig { ell0: 1.2, c: 3.0, horizon: 15.0, replications: 2, seed: 0, bcp: BcpConfig::defaults(&l, 0) };
        assert!(convergence_sweep(&l, &[PolicyKind::Threshold], &[20.0], &cfg).is_err());
        assert!(convergence_sweep(&l, &[PolicyKind::Threshold], &[20.0, 10.0], &cfg).is_err());
    }

    #[test]
    fn single_replication_has_no_stderr() {
        let net = make_r_network(NetworkLimits::example(), 5.0, 1.2, 3.0, DriftMode::Constant).unwrap();
        let run = estimate_cost(&net, PolicyKind::Threshold, 10.0, 1, 3).unwrap();
        assert!(run.estimate.stderr.is_none());
        assert!(run.estimate.mean.is_finite() && run.estimate.mean > 0.0);
    }
}
