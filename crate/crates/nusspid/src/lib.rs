//! Deterministic simulation of a Nussbaum-gain adaptive PID controller on a
//! two-link planar manipulator.
//!
//! The controller drives the arm along a reference trajectory without
//! knowing the robot's dynamics or even the sign of its actuation: a
//! Nussbaum gain N(ζ) = ζ²cos ζ sweeps the loop gain until it finds a
//! stabilizing direction, an RBF network feeds the adaptive part of the
//! gain, and a σ-leak keeps the weights bounded. The crate provides:
//!
//! - [`dynamics`]: closed-form two-link arm model (inertia, Coriolis,
//!   gravity, forward dynamics, energy),
//! - [`rbf`]: the Gaussian basis expansion,
//! - [`controller`]: the adaptive law, its fixed-gain baseline and the
//!   Nussbaum machinery,
//! - [`sim`]: reference trajectory, augmented closed-loop state, fixed-step
//!   RK4, scenario execution, metrics and monitors,
//! - [`verify`]: the numerical property suite (structural identities,
//!   passivity, integrator order, Nussbaum properties, gain linking),
//! - [`config`] / [`csv`] / [`cli`]: the JSON config surface, the CSV trace
//!   schema and the `run` / `sweep` / `verify` commands.
//!
//! Simulations are pure and single-threaded: the same config produces a
//! bit-identical trace every time.

pub mod cli;
pub mod config;
pub mod controller;
pub mod csv;
pub mod dynamics;
pub mod rbf;
pub mod sim;
pub mod verify;

pub use controller::{ControllerKind, ControllerParams, ControllerState};
pub use dynamics::{JointState, RobotParams};
pub use rbf::RbfLayout;
pub use sim::{run_scenario, RunMetrics, ScenarioResult, SimConfig, SimRecord};
