//! Event-driven simulation of the r-th crisscross network.
//!
//! The network is a continuous-time Markov chain: two Poisson arrival
//! streams and exponential services. At every event epoch the policy is
//! re-evaluated. Preemption is resume-type; a preempted job's remaining
//! service is redrawn when it resumes, which has the same law by
//! memorylessness.
//!
//! Each primitive stream (two arrivals, three services) draws from its own
//! generator derived from the run seed, so two policies simulated with the
//! same seed see the same arrival sequence.

mod audit;
mod scaling;
mod trajectory;

pub use audit::{audit_non_idling, check_conservation};
pub use scaling::{check_scaled_identities, diffusion_scale, fluid_scale, DiffusionTerms, ScaledTrajectory, Scaling};
pub use trajectory::{Epoch, Trajectory};

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{domain, Error, Result};
use crate::params::RNetwork;
use crate::policy::{Action, Policy, Server1, Server2};
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Event {
    Arrival1,
    Arrival2,
    Service1,
    Service2,
}

fn exp_draw(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    let e: f64 = Exp1.sample(rng);
    e / rate
}

struct Streams {
    rngs: [ChaCha8Rng; 5],
}

impl Streams {
    fn new(seed: u64) -> Self {
        let s = |k| stream_rng(seed, k);
        Streams {
            rngs: [
                s(Stream::Arrival1),
                s(Stream::Arrival2),
                s(Stream::Service1),
                s(Stream::Service2),
                s(Stream::Service3),
            ],
        }
    }

    fn draw(&mut self, stream: Stream, rate: f64) -> f64 {
        exp_draw(&mut self.rngs[stream as usize], rate)
    }
}

/// Simulate `net` under `policy` over `[0, horizon]` (unscaled time),
/// starting empty. The returned trajectory has one epoch at `t = 0`, one per
/// event, and a closing epoch at `horizon`.
pub fn simulate<P: Policy + ?Sized>(net: &RNetwork, policy: &P, horizon: f64, seed: u64) -> Result<Trajectory> {
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(domain(format!("horizon must be finite and >= 0, got {horizon}")));
    }
    let [l1, l2] = net.lambda_r;
    let [m1, m2, m3] = net.mu_r;
    let mut streams = Streams::new(seed);

    let mut t = 0.0f64;
    let mut q = [0u64; 3];
    let mut counts = [0u64; 5];
    let mut alloc = [0.0f64; 3];
    let mut idle = [0.0f64; 2];
    let mut epochs = Vec::new();

    let mut next_arrival = [streams.draw(Stream::Arrival1, l1), streams.draw(Stream::Arrival2, l2)];
    // Activity in service at server 1 with its completion time.
    let mut server1_clock: Option<(Server1, f64)> = None;
    let mut server2_clock: Option<f64> = None;

    loop {
        let action = policy.decide(q);
        let serves_empty = match action.server1 {
            Server1::ServeBuffer1 if q[0] == 0 => Some(1),
            Server1::ServeBuffer2 if q[1] == 0 => Some(2),
            _ => None,
        }
        .or((action.server2 == Server2::ServeBuffer3 && q[2] == 0).then_some(3));
        if let Some(buffer) = serves_empty {
            return Err(Error::EmptyService { buffer, time: t });
        }
        epochs.push(Epoch::new(t, q, alloc, idle, counts, action));

        match action.server1 {
            Server1::Idle => server1_clock = None,
            a if server1_clock.map(|c| c.0) != Some(a) => {
                let d = match a {
                    Server1::ServeBuffer1 => streams.draw(Stream::Service1, m1),
                    _ => streams.draw(Stream::Service2, m2),
                };
                server1_clock = Some((a, t + d));
            }
            _ => {}
        }
        match action.server2 {
            Server2::Idle => server2_clock = None,
            Server2::ServeBuffer3 => {
                if server2_clock.is_none() {
                    server2_clock = Some(t + streams.draw(Stream::Service3, m3));
                }
            }
        }

        let mut next = (next_arrival[0], Event::Arrival1);
        if next_arrival[1] < next.0 {
            next = (next_arrival[1], Event::Arrival2);
        }
        if let Some((_, c)) = server1_clock {
            if c < next.0 {
                next = (c, Event::Service1);
            }
        }
        if let Some(c) = server2_clock {
            if c < next.0 {
                next = (c, Event::Service2);
            }
        }

        let stop = next.0 > horizon;
        let until = if stop { horizon } else { next.0 };
        advance(&mut alloc, &mut idle, &action, until - t);
        t = until;
        if stop {
            if t > epochs.last().map_or(0.0, |e: &Epoch| e.time) {
                epochs.push(Epoch::new(t, q, alloc, idle, counts, action));
            }
            break;
        }

        match next.1 {
            Event::Arrival1 => {
                q[0] += 1;
                counts[0] += 1;
                next_arrival[0] = t + streams.draw(Stream::Arrival1, l1);
            }
            Event::Arrival2 => {
                q[1] += 1;
                counts[1] += 1;
                next_arrival[1] = t + streams.draw(Stream::Arrival2, l2);
            }
            Event::Service1 => {
                let (activity, _) = server1_clock.take().expect("service event without a clock");
                if activity == Server1::ServeBuffer1 {
                    q[0] -= 1;
                    counts[2] += 1;
                } else {
                    q[1] -= 1;
                    q[2] += 1;
                    counts[3] += 1;
                }
            }
            Event::Service2 => {
                server2_clock = None;
                q[2] -= 1;
                counts[4] += 1;
            }
        }
    }

    Ok(Trajectory { r: net.r, mu_r: net.mu_r, horizon, epochs })
}

fn advance(alloc: &mut [f64; 3], idle: &mut [f64; 2], action: &Action, dt: f64) {
    match action.server1 {
        Server1::ServeBuffer1 => alloc[0] += dt,
        Server1::ServeBuffer2 => alloc[1] += dt,
        Server1::Idle => idle[0] += dt,
    }
    match action.server2 {
        Server2::ServeBuffer3 => alloc[2] += dt,
        Server2::Idle => idle[1] += dt,
    }
}
