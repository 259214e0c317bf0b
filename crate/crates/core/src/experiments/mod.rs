//! Experiments on the queueing network: discounted costs across the
//! heavy-traffic sequence, collapse diagnostics and Poisson tail probes.

mod cost;
mod diagnostics;
mod ld;

pub use cost::{
    convergence_sweep, discounted_cost, estimate_cost, sweep_against, DiscountedCostRun, PathCost, SweepConfig,
    SweepRow, SweepTable, Thresholds,
};
pub use diagnostics::{
    diagnostics_batch, fluid_deviation, run_diagnostics, theorem_bound, DiagnosticsReport, DiagnosticsSummary,
    TailBound,
};
pub use ld::{ld_check, LdRow};
