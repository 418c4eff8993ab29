//! Minimum-age status updating by an energy harvesting sensor with a unit
//! battery over a feedback-free erasure channel.
//!
//! [`analytic`] computes the optimal threshold or greedy policy and its
//! long-term average age of information in closed form; [`simulator`] checks
//! it by event-driven Monte Carlo; [`statistics`] and [`experiments`] carry
//! the estimation and comparison machinery.

pub mod analytic;
pub mod experiments;
pub mod policy;
pub mod simulator;
pub mod statistics;

#[cfg(test)]
pub(crate) mod testutil;

pub use analytic::{solve_optimal, ChannelModel, Regime, SolverResult};
pub use policy::PolicySpec;
pub use simulator::{run_replications, run_simulation, SimConfig, SimResult};
