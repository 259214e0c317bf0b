//! Heavy-traffic simulation and Monte Carlo verification for the crisscross
//! queueing network.

pub mod bcp;
pub mod config;
pub mod error;
pub mod experiments;
pub mod params;
pub mod policy;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod workload;

pub use error::{Error, Result};

// The book's code blocks run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/network.md")]
    pub struct Network;
    #[doc = include_str!("../../../book/src/workload.md")]
    pub struct Workload;
    #[doc = include_str!("../../../book/src/policy.md")]
    pub struct Policy;
    #[doc = include_str!("../../../book/src/simulation.md")]
    pub struct Simulation;
    #[doc = include_str!("../../../book/src/bcp.md")]
    pub struct Bcp;
    #[doc = include_str!("../../../book/src/experiments.md")]
    pub struct Experiments;
    #[doc = include_str!("../../../book/src/large-deviations.md")]
    pub struct LargeDeviations;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}
