//! Simulation and control evaluation for the sterile insect technique (SIT)
//! mosquito population model.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: parameters, state, right-hand side, observables, equilibria
//! - [`integrate`]: Euler and RK4 stepping, trajectories, convergence check
//! - [`control`]: constant, piecewise (`u_reg`), bang-bang (`v_reg`) and noisy laws
//! - [`env`]: reset/step training environment
//! - [`experiments`]: Monte Carlo batches, heatmaps, `u_min` sweeps, cycle detection
//! - [`config`] and [`export`]: flat configuration files and delimited outputs
//!
//! Batches run on the rayon pool when the `parallel` feature is enabled
//! (the default) and sequentially otherwise.

pub mod config;
pub mod control;
pub mod env;
pub mod error;
pub mod experiments;
pub mod export;
pub mod integrate;
pub mod model;
pub mod parallel;
pub mod seed;

pub use control::{ControlLaw, RegPiecewise, SimplifiedBang};
pub use env::{EnvConfig, EnvState, Environment, StepOutcome};
pub use error::{Result, SitError};
pub use experiments::{run_batch, run_batch_with, BatchConfig, StatsReport};
pub use integrate::{convergence_check, simulate, Scheme, SimConfig, Trajectory};
pub use model::{ModelParams, Observation, SitState};
pub use parallel::Execution;
