use super::{Epoch, Trajectory};
use crate::error::{Error, Result};
use crate::policy::{Server1, Server2};

const REL_TOL: f64 = 1e-9;

fn violation(epoch: usize, what: impl Into<String>) -> Error {
    Error::Conservation { epoch, what: what.into() }
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= REL_TOL * scale.max(1.0)
}

fn check_epoch(k: usize, e: &Epoch) -> Result<()> {
    let [a1, a2, s1, s2, s3] = e.counts.map(|c| c as i64);
    let expected = [a1 - s1, a2 - s2, s2 - s3];
    for (i, (&q, &x)) in e.q.iter().zip(&expected).enumerate() {
        if q != x {
            return Err(violation(k, format!("Q{} = {q} but counts give {x}", i + 1)));
        }
        if q < 0 {
            return Err(violation(k, format!("Q{} = {q} is negative", i + 1)));
        }
    }
    for (i, &v) in e.idle.iter().enumerate() {
        if v < 0.0 {
            return Err(violation(k, format!("I{} = {v} is negative", i + 1)));
        }
    }
    let [t1, t2, t3] = e.alloc;
    if !close(t1 + t2 + e.idle[0], e.time, e.time) {
        return Err(violation(k, format!("T1 + T2 + I1 = {} but t = {}", t1 + t2 + e.idle[0], e.time)));
    }
    if !close(t3 + e.idle[1], e.time, e.time) {
        return Err(violation(k, format!("T3 + I2 = {} but t = {}", t3 + e.idle[1], e.time)));
    }
    let server2_idle = e.action.server2 == Server2::Idle;
    if server2_idle != (e.q[2] == 0) {
        return Err(violation(k, format!("server 2 idle = {server2_idle} with Q3 = {}", e.q[2])));
    }
    Ok(())
}

fn check_step(k: usize, prev: &Epoch, next: &Epoch) -> Result<()> {
    let dt = next.time - prev.time;
    if !(dt > 0.0) {
        return Err(violation(k, format!("epoch time {} does not exceed {}", next.time, prev.time)));
    }
    if next.counts.iter().zip(&prev.counts).any(|(a, b)| a < b) {
        return Err(violation(k, "a counting process decreased"));
    }
    let rates = prev.action.allocation_rates();
    let idle_rates = [(prev.action.server1 == Server1::Idle) as u8, (prev.action.server2 == Server2::Idle) as u8];
    let scale = next.time;
    for j in 0..3 {
        let d = next.alloc[j] - prev.alloc[j];
        if d < -REL_TOL * scale.max(1.0) || d > dt + REL_TOL * scale.max(1.0) {
            return Err(violation(k, format!("T{} moved by {d} over an interval of length {dt}", j + 1)));
        }
        if !close(d, rates[j] as f64 * dt, scale) {
            return Err(violation(
                k,
                format!("T{} increment {d} does not match the action in force ({:?})", j + 1, prev.action),
            ));
        }
    }
    for j in 0..2 {
        let d = next.idle[j] - prev.idle[j];
        if d < -REL_TOL * scale.max(1.0) {
            return Err(violation(k, format!("I{} decreased by {}", j + 1, -d)));
        }
        if !close(d, idle_rates[j] as f64 * dt, scale) {
            return Err(violation(k, format!("I{} increment {d} does not match the action in force", j + 1)));
        }
    }
    Ok(())
}

/// Audit every flow-conservation and allocation identity of a trajectory.
/// Returns the first violation found.
pub fn check_conservation(traj: &Trajectory) -> Result<()> {
    for (k, e) in traj.epochs.iter().enumerate() {
        check_epoch(k, e)?;
        if k > 0 {
            check_step(k, &traj.epochs[k - 1], e)?;
        }
    }
    Ok(())
}

/// Confirm that idle time accrues only while the idling server has nothing
/// to do: `I1` only when `Q1 = Q2 = 0`, `I2` only when `Q3 = 0`.
pub fn audit_non_idling(traj: &Trajectory) -> Result<()> {
    for (k, w) in traj.epochs.windows(2).enumerate() {
        let (prev, next) = (&w[0], &w[1]);
        let scale = next.time.max(1.0) * REL_TOL;
        if next.idle[0] - prev.idle[0] > scale && (prev.q[0] != 0 || prev.q[1] != 0) {
            return Err(violation(k, format!("server 1 idled with Q = {:?}", prev.q)));
        }
        if next.idle[1] - prev.idle[1] > scale && prev.q[2] != 0 {
            return Err(violation(k, format!("server 2 idled with Q = {:?}", prev.q)));
        }
    }
    Ok(())
}
