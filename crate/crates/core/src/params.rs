//! Model parameters, the heavy-traffic sequence of networks, and the
//! threshold constants built from Poisson large-deviation rates.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result, Violation, ViolationReport};
use crate::workload::WorkloadMatrix;

/// Tolerance for the exact heavy-traffic identities on the limiting rates.
pub const HEAVY_TRAFFIC_TOL: f64 = 1e-12;

/// Limiting parameters of the crisscross network.
///
/// Class 1 and class 2 jobs arrive at rates `lambda`; server 1 serves
/// buffers 1 and 2 at rates `mu[0]`, `mu[1]`, and class 2 jobs then move to
/// buffer 3, served by server 2 at rate `mu[2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkLimits {
    pub lambda: [f64; 2],
    pub mu: [f64; 3],
    pub h: [f64; 3],
    pub gamma: f64,
    pub b: [f64; 3],
}

impl NetworkLimits {
    /// The standard example: unit holding costs, `mu = (2, 2, 1)`, and the
    /// arrival rates forced by heavy traffic, `lambda = (1, 1)`.
    pub fn example() -> Self {
        NetworkLimits { lambda: [1.0, 1.0], mu: [2.0, 2.0, 1.0], h: [1.0, 1.0, 1.0], gamma: 1.0, b: [0.0; 3] }
    }

    pub fn validate(self) -> Result<Self> {
        validate_limits(self)
    }

    /// Variance per unit time of the two workload projections of the limit
    /// Brownian motion, and their covariance.
    pub fn workload_covariance(&self) -> [[f64; 2]; 2] {
        let [l1, l2] = self.lambda;
        let [m1, m2, m3] = self.mu;
        let v1 = 2.0 * l1 / (m1 * m1) + 2.0 * l2 / (m2 * m2);
        let v2 = 2.0 * l2 / (m3 * m3);
        let cov = l2 / (m2 * m3);
        [[v1, cov], [cov, v2]]
    }
}

/// Check positivity, heavy traffic and the Case IIA cost ordering.
///
/// On failure the report names every violated condition and by how much.
pub fn validate_limits(limits: NetworkLimits) -> Result<NetworkLimits> {
    let mut report = Vec::new();
    let NetworkLimits { lambda, mu, h, gamma, b } = limits;

    let positives = lambda
        .iter()
        .enumerate()
        .map(|(i, &v)| (format!("lambda{}", i + 1), v))
        .chain(mu.iter().enumerate().map(|(i, &v)| (format!("mu{}", i + 1), v)))
        .chain(h.iter().enumerate().map(|(i, &v)| (format!("h{}", i + 1), v)))
        .chain(std::iter::once(("gamma".to_string(), gamma)));
    for (name, v) in positives {
        if !(v.is_finite() && v > 0.0) {
            report.push(Violation {
                assumption: "positivity",
                detail: format!("{name} = {v} must be finite and > 0"),
                amount: v,
            });
        }
    }
    if b.iter().any(|v| !v.is_finite()) {
        report.push(Violation {
            assumption: "positivity",
            detail: format!("drift offsets {b:?} must be finite"),
            amount: f64::NAN,
        });
    }
    if !report.is_empty() {
        return Err(Error::InvalidLimits(ViolationReport(report)));
    }

    let load1 = lambda[0] / mu[0] + lambda[1] / mu[1];
    if (load1 - 1.0).abs() > HEAVY_TRAFFIC_TOL {
        report.push(Violation {
            assumption: "heavy-traffic",
            detail: format!("lambda1/mu1 + lambda2/mu2 = {load1} != 1"),
            amount: load1 - 1.0,
        });
    }
    let load2 = lambda[1] / mu[2];
    if (load2 - 1.0).abs() > HEAVY_TRAFFIC_TOL {
        report.push(Violation {
            assumption: "heavy-traffic",
            detail: format!("lambda2/mu3 = {load2} != 1"),
            amount: load2 - 1.0,
        });
    }

    let case2 = h[0] * mu[0] - h[1] * mu[1] + h[2] * mu[1];
    if case2 <= 0.0 {
        report.push(Violation {
            assumption: "case-IIA",
            detail: format!("h1 mu1 - h2 mu2 + h3 mu2 = {case2} must be > 0"),
            amount: case2,
        });
    }
    let coef1 = h[1] * mu[1] - h[2] * mu[1];
    if coef1 < 0.0 {
        report.push(Violation {
            assumption: "case-IIA",
            detail: format!("h2 mu2 - h3 mu2 = {coef1} must be >= 0"),
            amount: coef1,
        });
    }
    let coef2 = h[1] * mu[1] - h[0] * mu[0];
    if coef2 < 0.0 {
        report.push(Violation {
            assumption: "case-IIA",
            detail: format!("h2 mu2 - h1 mu1 = {coef2} must be >= 0"),
            amount: coef2,
        });
    }

    if report.is_empty() {
        Ok(limits)
    } else {
        Err(Error::InvalidLimits(ViolationReport(report)))
    }
}

/// How the drift offsets of the r-th network are realized.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum DriftMode {
    /// `b^r = b` for every r: arrival rates are perturbed, `mu1`, `mu2` are
    /// kept, and `mu3` absorbs whatever `b3` needs.
    #[default]
    Constant,
    /// Use these offsets for this r instead of the limits' `b`.
    Explicit([f64; 3]),
}

/// The r-th network of the heavy-traffic sequence with its policy thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RNetwork {
    pub r: f64,
    pub limits: NetworkLimits,
    pub lambda_r: [f64; 2],
    pub mu_r: [f64; 3],
    /// Lower threshold `L^r`.
    pub lower: u64,
    /// Upper threshold `C^r`.
    pub upper: u64,
    pub ell0: f64,
    pub c: f64,
}

impl RNetwork {
    /// Assemble a network from explicit rates and thresholds, enforcing the
    /// usability floor.
    pub fn from_parts(
        limits: NetworkLimits,
        r: f64,
        lambda_r: [f64; 2],
        mu_r: [f64; 3],
        lower: u64,
        upper: u64,
    ) -> Result<Self> {
        if !(r >= 1.0) {
            return Err(domain(format!("heavy-traffic index r = {r} must be >= 1")));
        }
        if lambda_r.iter().chain(mu_r.iter()).any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Unusable {
                r,
                reason: format!("rates lambda^r = {lambda_r:?}, mu^r = {mu_r:?} must be positive"),
            });
        }
        let gap = upper as i64 - lower as i64;
        if gap - 1 < 1 {
            return Err(Error::Unusable {
                r,
                reason: format!("C^r - L^r - 1 = {} < 1 (L^r = {lower}, C^r = {upper})", gap - 1),
            });
        }
        let cutoff = mu_r[0] / mu_r[1] * (gap + 2) as f64;
        if cutoff < 1.0 {
            return Err(Error::Unusable { r, reason: format!("(mu1^r/mu2^r)(C^r - L^r + 2) = {cutoff} < 1") });
        }
        Ok(RNetwork { r, limits, lambda_r, mu_r, lower, upper, ell0: f64::NAN, c: f64::NAN })
    }

    /// `b^r` re-derived from the concrete rates.
    pub fn drift_r(&self) -> [f64; 3] {
        let NetworkLimits { lambda, mu, .. } = self.limits;
        let r = self.r;
        [
            r * (self.lambda_r[0] / self.mu_r[0] - lambda[0] / mu[0]),
            r * (self.lambda_r[1] / self.mu_r[1] - lambda[1] / mu[1]),
            r * (self.lambda_r[1] / self.mu_r[2] - 1.0),
        ]
    }

    /// `M^r`.
    pub fn workload_matrix(&self) -> WorkloadMatrix {
        WorkloadMatrix::new(self.mu_r)
    }

    /// `mu2^r / mu1^r`, the weight on `Q1` in the regime switch.
    pub fn switch_weight(&self) -> f64 {
        self.mu_r[1] / self.mu_r[0]
    }

    /// `(mu1^r / mu2^r)(C^r - L^r + 2)`, the buffer-1 level that forces
    /// server 1 back to buffer 1 in the buffer-1-heavy regime.
    pub fn buffer1_cutoff(&self) -> f64 {
        self.mu_r[0] / self.mu_r[1] * (self.upper as f64 - self.lower as f64 + 2.0)
    }
}

fn drifted_rates(limits: &NetworkLimits, r: f64, b: [f64; 3]) -> ([f64; 2], [f64; 3]) {
    let NetworkLimits { lambda, mu, .. } = *limits;
    let lambda_r = [lambda[0] + b[0] * mu[0] / r, lambda[1] + b[1] * mu[1] / r];
    let mu3_r = lambda_r[1] / (1.0 + b[2] / r);
    (lambda_r, [mu[0], mu[1], mu3_r])
}

/// Build the r-th network: rates matching the drift policy and thresholds
/// `L^r = floor(ell0 ln r)`, `C^r = floor(c ell0 ln r)`.
pub fn make_r_network(limits: NetworkLimits, r: f64, ell0: f64, c: f64, drift: DriftMode) -> Result<RNetwork> {
    let limits = validate_limits(limits)?;
    if !(r >= 1.0) {
        return Err(domain(format!("heavy-traffic index r = {r} must be >= 1")));
    }
    if !(ell0 > 1.0) || !(c > 1.0) {
        return Err(domain(format!("threshold parameters must exceed 1, got ell0 = {ell0}, c = {c}")));
    }
    let b = match drift {
        DriftMode::Constant => limits.b,
        DriftMode::Explicit(b) => b,
    };
    let (lambda_r, mu_r) = drifted_rates(&limits, r, b);
    let lower = (ell0 * r.ln()).floor() as u64;
    let upper = (c * ell0 * r.ln()).floor() as u64;
    let mut net = RNetwork::from_parts(limits, r, lambda_r, mu_r, lower, upper)?;
    net.ell0 = ell0;
    net.c = c;
    Ok(net)
}

/// The `ell0 = 0` variant with `C^r = floor(c0 ln r)`. Nothing proves this
/// variant asymptotically optimal; results from it are conjectural.
pub fn make_r_network_conjectured(limits: NetworkLimits, r: f64, c0: f64, drift: DriftMode) -> Result<RNetwork> {
    let limits = validate_limits(limits)?;
    if !(r >= 1.0) || !(c0 > 0.0) {
        return Err(domain(format!("need r >= 1 and c0 > 0, got r = {r}, c0 = {c0}")));
    }
    let b = match drift {
        DriftMode::Constant => limits.b,
        DriftMode::Explicit(b) => b,
    };
    let (lambda_r, mu_r) = drifted_rates(&limits, r, b);
    let upper = (c0 * r.ln()).floor() as u64;
    let mut net = RNetwork::from_parts(limits, r, lambda_r, mu_r, 0, upper)?;
    net.ell0 = 0.0;
    net.c = f64::INFINITY;
    Ok(net)
}

/// Cramér rate function of a Poisson process of rate `lambda`:
/// `I(x) = x ln(x / lambda) - x + lambda`.
pub fn poisson_rate_function(lambda: f64, x: f64) -> Result<f64> {
    if !(lambda > 0.0) || !(x > 0.0) {
        return Err(domain(format!("rate function needs lambda > 0 and x > 0, got {lambda}, {x}")));
    }
    Ok(x * (x / lambda).ln() - x + lambda)
}

/// Exponential decay rate of `P(N(t) >= (rate + eps) t or N(t) <= (rate - eps) t)`.
pub fn varsigma2(rate: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(domain(format!("deviation eps = {eps} must be > 0")));
    }
    if rate - eps <= 0.0 {
        return Err(domain(format!("lower deviation rate - eps = {} must be > 0", rate - eps)));
    }
    let up = poisson_rate_function(rate, rate + eps)?;
    let down = poisson_rate_function(rate, rate - eps)?;
    Ok(up.min(down))
}

/// Constants of the large-deviation analysis of the threshold policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdConstants {
    pub theta3: f64,
    pub rho2: f64,
    pub c: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub d: f64,
    pub theta: f64,
    pub gamma4: f64,
    pub ell_bar: f64,
    pub kappa: f64,
}

/// Lower bound on the collapse constant kappa for a given `c`.
pub fn kappa_lower_bound(limits: &NetworkLimits, c: f64, theta3: f64) -> f64 {
    let [m1, m2, _] = limits.mu;
    [2.0 * m1 / m2, 4.0, c / (c - 1.0), 2.0 * m2 * c / (m1 * (c - 1.0)), theta3]
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Kappa used by the diagnostics: the strict lower bound scaled by 1.01.
pub fn kappa_for(limits: &NetworkLimits, c: f64, theta3: f64) -> f64 {
    1.01 * kappa_lower_bound(limits, c, theta3)
}

pub fn compute_threshold_constants(limits: NetworkLimits) -> Result<ThresholdConstants> {
    let limits = validate_limits(limits)?;
    let [l1, l2] = limits.lambda;
    let [m1, m2, m3] = limits.mu;
    if m2 <= m3 {
        return Err(domain(format!("threshold constants need mu2 > mu3, got mu2 = {m2}, mu3 = {m3}")));
    }
    if !(l1 > 0.5 && m1 > 0.5) {
        return Err(domain(format!(
            "threshold constants use half-unit deviations of lambda1 and mu1, which need both > 1/2; got {l1}, {m1}"
        )));
    }
    let eta1 = varsigma2(l1, 0.5)?;
    let eta2 = varsigma2(m1, 0.5)?;
    let eta3 = varsigma2(m3, (m3 / 2.0).min(1.0))?;
    let eta4 = varsigma2(m2, (m2 / 2.0).min(1.0))?;
    let theta3 = m1 / (m2 * l1) * eta1.min(eta2);
    let rho2 = eta3.min(eta4);
    let c = 1.0 + 4.0 / theta3 + 4.0 * (m2 - m3) / varsigma2(l2, l2 / 2.0)?;
    let k = 2.0 * [4.0, 16.0 * l2, 32.0 * m2, 16.0 * m3].into_iter().fold(0.0, f64::max);
    let d = c * k / ((m2 - m3) / 2.0);
    let theta = 0.5 * (0.25f64).min(1.0 / (32.0 * d));
    let gamma4 = 2.0 * d / k * theta * rho2;
    let ell_bar = (4.0 / gamma4).max(4.0 / (theta3 * (c - 1.0))) + 1.0;
    let kappa = kappa_for(&limits, c, theta3);
    Ok(ThresholdConstants { theta3, rho2, c, k, d, theta, gamma4, ell_bar, kappa })
}
