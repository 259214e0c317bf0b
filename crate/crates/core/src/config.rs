//! Experiment configuration, read from JSON.
//!
//! ```json
//! {
//!   "lambda": [1, 1], "mu": [2, 2, 1], "h": [1, 1, 1], "gamma": 1,
//!   "b": [0, 0, 0], "ell0": 1.2, "c": 3, "r_list": [5, 10, 20, 40],
//!   "seed": 7, "replications": 200, "horizon": 15, "policy": "threshold"
//! }
//! ```
//!
//! `lambda`, `mu`, `h` and `gamma` are required. `policy` is a name or a
//! list of names. Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{validate_limits, NetworkLimits};
use crate::policy::PolicyKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolicySpec {
    One(PolicyKind),
    Many(Vec<PolicyKind>),
}

fn default_ell0() -> f64 {
    1.2
}

fn default_c() -> f64 {
    3.0
}

fn default_r_list() -> Vec<f64> {
    vec![5.0, 10.0, 20.0, 40.0]
}

fn default_replications() -> usize {
    200
}

fn default_horizon() -> f64 {
    15.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub lambda: [f64; 2],
    pub mu: [f64; 3],
    pub h: [f64; 3],
    pub gamma: f64,
    #[serde(default)]
    pub b: [f64; 3],
    #[serde(default = "default_ell0")]
    pub ell0: f64,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_r_list")]
    pub r_list: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    /// Scaled horizon.
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<PolicySpec>,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn check(&self) -> Result<()> {
        validate_limits(self.limits())?;
        if self.r_list.is_empty() {
            return Err(Error::Config("r_list is empty".into()));
        }
        if let Some(r) = self.r_list.iter().find(|r| !(**r >= 1.0) || !r.is_finite()) {
            return Err(Error::Config(format!("r_list entry {r} is not a finite value >= 1")));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::Config(format!("horizon must be finite and > 0, got {}", self.horizon)));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        if matches!(&self.policy, Some(PolicySpec::Many(v)) if v.is_empty()) {
            return Err(Error::Config("policy list is empty".into()));
        }
        Ok(())
    }

    pub fn limits(&self) -> NetworkLimits {
        NetworkLimits { lambda: self.lambda, mu: self.mu, h: self.h, gamma: self.gamma, b: self.b }
    }

    /// Configured policies; all of them when none is named.
    pub fn policies(&self) -> Vec<PolicyKind> {
        match &self.policy {
            None => PolicyKind::ALL.to_vec(),
            Some(PolicySpec::One(p)) => vec![*p],
            Some(PolicySpec::Many(v)) => v.clone(),
        }
    }

    /// The first configured policy, or the threshold policy.
    pub fn primary_policy(&self) -> PolicyKind {
        match &self.policy {
            None => PolicyKind::Threshold,
            Some(_) => self.policies()[0],
        }
    }
}
