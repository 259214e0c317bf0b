use std::fmt;

use thiserror::Error;

/// One failed model assumption, with the signed amount by which it failed.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub assumption: &'static str,
    pub detail: String,
    pub amount: f64,
}

/// Every assumption a set of network limits failed, in check order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ViolationReport(pub Vec<Violation>);

impl ViolationReport {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn violations(&self) -> &[Violation] {
        &self.0
    }

    pub fn mentions(&self, assumption: &str) -> bool {
        self.0.iter().any(|v| v.assumption == assumption)
    }
}

impl fmt::Display for ViolationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{}: {} (off by {:e})", v.assumption, v.detail, v.amount)?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network limits: {0}")]
    InvalidLimits(ViolationReport),

    #[error("network r = {r} is below the usability floor: {reason}")]
    Unusable { r: f64, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("policy chose to serve empty buffer {buffer} at t = {time}")]
    EmptyService { buffer: usize, time: f64 },

    #[error("conservation violated at epoch {epoch}: {what}")]
    Conservation { epoch: usize, what: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
