//! Scheduling policies: pure functions from queue lengths to server actions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::RNetwork;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Server1 {
    ServeBuffer1,
    ServeBuffer2,
    Idle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Server2 {
    ServeBuffer3,
    Idle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Action {
    pub server1: Server1,
    pub server2: Server2,
}

impl Action {
    /// Allocation rates `(dT1, dT2, dT3)` implied by the action.
    pub fn allocation_rates(&self) -> [u8; 3] {
        [
            (self.server1 == Server1::ServeBuffer1) as u8,
            (self.server1 == Server1::ServeBuffer2) as u8,
            (self.server2 == Server2::ServeBuffer3) as u8,
        ]
    }
}

/// Queue lengths `(Q1, Q2, Q3)`.
pub type QueueVec = [u64; 3];

pub trait Policy: Sync {
    fn decide(&self, q: QueueVec) -> Action;
}

fn non_idling_server2(q: QueueVec) -> Server2 {
    if q[2] > 0 {
        Server2::ServeBuffer3
    } else {
        Server2::Idle
    }
}

/// The threshold rule for server 1, written clause by clause.
///
/// With `D = Q3 - (mu2/mu1) Q1`:
/// * `D < L`: serve buffer 2 if `Q3 < C - 1` and `Q2 > 0`, otherwise buffer 1
///   when it is nonempty.
/// * `D >= L`: serve buffer 1 (when nonempty) if `Q1 >= (mu1/mu2)(C - L + 2)`
///   or `Q2 = 0`, otherwise buffer 2.
///
/// Server 1 idles only when buffers 1 and 2 are both empty; server 2 idles
/// only when buffer 3 is empty.
pub fn threshold_decide(q: QueueVec, net: &RNetwork) -> Action {
    let [q1, q2, q3] = q;
    let server1 = if q1 == 0 && q2 == 0 {
        Server1::Idle
    } else if (q3 as f64) - net.switch_weight() * (q1 as f64) < net.lower as f64 {
        if (q3 as f64) < net.upper as f64 - 1.0 && q2 != 0 {
            Server1::ServeBuffer2
        } else if q1 > 0 {
            Server1::ServeBuffer1
        } else {
            // Unreachable above the usability floor: Q1 = 0 in this regime
            // means Q3 < L <= C - 2, so only Q2 = 0 gets here, which idled.
            Server1::ServeBuffer2
        }
    } else if (q1 as f64 >= net.buffer1_cutoff() || q2 == 0) && q1 > 0 {
        Server1::ServeBuffer1
    } else {
        Server1::ServeBuffer2
    };
    Action { server1, server2: non_idling_server2(q) }
}

/// Allocation rates from the indicator-product form of the threshold policy:
///
/// ```text
/// dT1 = (1_A 1_B + 1_A^c 1_C) 1_D,   dT2 = (1_A 1_B^c + 1_A^c 1_C^c) 1_D,   dT3 = 1{Q3 > 0}
/// ```
///
/// with `A = {Q3 - (mu2/mu1) Q1 < L}`, `B = {Q3 >= C - 1 or Q2 = 0}`,
/// `C = {Q1 >= (mu1/mu2)(C - L + 2) or Q2 = 0}`, `D = {Q1 + Q2 != 0}`.
pub fn indicator_rates(q: QueueVec, net: &RNetwork) -> [u8; 3] {
    let [q1, q2, q3] = q;
    let (q1f, q3f) = (q1 as f64, q3 as f64);
    let a = (q3f - net.switch_weight() * q1f < net.lower as f64) as u8;
    let b = (q3f >= net.upper as f64 - 1.0 || q2 == 0) as u8;
    let c = (q1f >= net.buffer1_cutoff() || q2 == 0) as u8;
    let d = (q1 + q2 != 0) as u8;
    let t1 = (a * b + (1 - a) * c) * d;
    let t2 = (a * (1 - b) + (1 - a) * (1 - c)) * d;
    let t3 = (q3 > 0) as u8;
    [t1, t2, t3]
}

/// Confirm that [`threshold_decide`] and [`indicator_rates`] agree at `q`
/// and that the rates are non-idling.
pub fn indicator_form_audit(q: QueueVec, net: &RNetwork) -> Result<()> {
    let rates = indicator_rates(q, net);
    let action = threshold_decide(q, net);
    let fail = |what: String| Err(Error::Domain(format!("indicator audit at q = {q:?}: {what}")));
    if rates != action.allocation_rates() {
        return fail(format!("indicator rates {rates:?} vs action {action:?}"));
    }
    let server1_busy = rates[0] + rates[1];
    if server1_busy > 1 {
        return fail(format!("dT1 + dT2 = {server1_busy}"));
    }
    if (server1_busy == 0) != (q[0] == 0 && q[1] == 0) {
        return fail("server 1 idles iff Q1 = Q2 = 0 fails".into());
    }
    if (rates[2] == 1) != (q[2] > 0) {
        return fail("server 2 serves iff Q3 > 0 fails".into());
    }
    Ok(())
}

/// Static priority for server 1; server 2 is non-idling.
pub fn priority_decide(q: QueueVec, prefer: usize) -> Action {
    let (first, second) = match prefer {
        1 => ((0usize, Server1::ServeBuffer1), (1usize, Server1::ServeBuffer2)),
        _ => ((1, Server1::ServeBuffer2), (0, Server1::ServeBuffer1)),
    };
    let server1 = if q[first.0] > 0 {
        first.1
    } else if q[second.0] > 0 {
        second.1
    } else {
        Server1::Idle
    };
    Action { server1, server2: non_idling_server2(q) }
}

#[derive(Debug, Clone, Copy)]
pub struct ThresholdPolicy {
    pub net: RNetwork,
}

impl Policy for ThresholdPolicy {
    fn decide(&self, q: QueueVec) -> Action {
        threshold_decide(q, &self.net)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PriorityPolicy {
    /// 1 or 2.
    pub prefer: usize,
}

impl Policy for PriorityPolicy {
    fn decide(&self, q: QueueVec) -> Action {
        priority_decide(q, self.prefer)
    }
}

/// Policy names accepted in configuration files and on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Threshold,
    Priority1,
    Priority2,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::Threshold, PolicyKind::Priority1, PolicyKind::Priority2];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Threshold => "threshold",
            PolicyKind::Priority1 => "priority1",
            PolicyKind::Priority2 => "priority2",
        }
    }

    pub fn build(self, net: &RNetwork) -> AnyPolicy {
        match self {
            PolicyKind::Threshold => AnyPolicy::Threshold(ThresholdPolicy { net: *net }),
            PolicyKind::Priority1 => AnyPolicy::Priority(PriorityPolicy { prefer: 1 }),
            PolicyKind::Priority2 => AnyPolicy::Priority(PriorityPolicy { prefer: 2 }),
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown policy {s:?} (expected threshold, priority1 or priority2)")))
    }
}

#[derive(Debug, Clone, Copy)]
pub enum AnyPolicy {
    Threshold(ThresholdPolicy),
    Priority(PriorityPolicy),
}

impl Policy for AnyPolicy {
    fn decide(&self, q: QueueVec) -> Action {
        match self {
            AnyPolicy::Threshold(p) => p.decide(q),
            AnyPolicy::Priority(p) => p.decide(q),
        }
    }
}
