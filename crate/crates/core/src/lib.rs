//! Robust and secure computation offloading for multi-UAV edge computing.
//!
//! Service UAVs (S-UAVs) carry edge servers and fly between fixed endpoints,
//! ground users (GUs) split divisible tasks between local execution and an
//! assigned S-UAV, and an eavesdropping UAV overhears the uplinks while a
//! ground jammer degrades its reception. Task complexities are uncertain with
//! known first and second moments; every per-slot latency deadline is a
//! distributionally robust chance constraint, handled through a worst-case
//! CVaR second-order-cone block.
//!
//! The crate is `no_std` + `alloc`. All numerical work (the conic interior
//! point solver, the CVaR blocks, min-cost-flow assignment, the SCA trajectory
//! step and the block-coordinate-descent driver) lives here; file formats,
//! the experiment runner and the command line are in the `aerosec` crate.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod conic;
pub mod cvar;
pub mod decomposition;
pub mod driver;
pub mod energy;
mod error;
pub mod link;
mod math;
pub mod sampling;
pub mod scenario;

pub use error::{Error, Infeasibility, Result};
pub use scenario::{Decision, NetworkParams, Point, Scenario, ScenarioParts, Task, TaskSpec};
