use std::io::Write;

use crate::error::Result;
use crate::policy::{Action, Server1, Server2};

/// State of the network from `time` until the next epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Epoch {
    pub time: f64,
    /// Queue lengths. Signed so that hand-built trajectories with impossible
    /// states can still be audited.
    pub q: [i64; 3],
    /// Cumulative allocations `T1, T2, T3`.
    pub alloc: [f64; 3],
    /// Cumulative idle times `I1, I2`.
    pub idle: [f64; 2],
    /// `A1, A2, S1(T1), S2(T2), S3(T3)`.
    pub counts: [u64; 5],
    /// Action in force on `[time, next epoch)`.
    pub action: Action,
}

impl Epoch {
    pub(crate) fn new(
        time: f64,
        q: [u64; 3],
        alloc: [f64; 3],
        idle: [f64; 2],
        counts: [u64; 5],
        action: Action,
    ) -> Self {
        Epoch { time, q: q.map(|v| v as i64), alloc, idle, counts, action }
    }
}

/// A piecewise-constant sample path of one replication, in unscaled time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub r: f64,
    pub mu_r: [f64; 3],
    pub horizon: f64,
    pub epochs: Vec<Epoch>,
}

fn server1_label(a: Server1) -> &'static str {
    match a {
        Server1::ServeBuffer1 => "serve1",
        Server1::ServeBuffer2 => "serve2",
        Server1::Idle => "idle",
    }
}

fn server2_label(a: Server2) -> &'static str {
    match a {
        Server2::ServeBuffer3 => "serve3",
        Server2::Idle => "idle",
    }
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn last(&self) -> &Epoch {
        self.epochs.last().expect("trajectory has at least one epoch")
    }

    /// CSV with columns `epoch, Q1, Q2, Q3, T1, T2, T3, I1, I2,
    /// server1_activity, server2_activity`; `epoch` is the event time.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "epoch",
            "Q1",
            "Q2",
            "Q3",
            "T1",
            "T2",
            "T3",
            "I1",
            "I2",
            "server1_activity",
            "server2_activity",
        ])?;
        for e in &self.epochs {
            w.write_record([
                e.time.to_string(),
                e.q[0].to_string(),
                e.q[1].to_string(),
                e.q[2].to_string(),
                e.alloc[0].to_string(),
                e.alloc[1].to_string(),
                e.alloc[2].to_string(),
                e.idle[0].to_string(),
                e.idle[1].to_string(),
                server1_label(e.action.server1).to_string(),
                server2_label(e.action.server2).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
