//! Simulation library and benchmark harness for informative path planning
//! over terrain maps: probabilistic discrete/continuous mapping with
//! altitude-dependent camera sensors, a two-stage (greedy lattice + CMA-ES)
//! trajectory planner, and coverage/spiral/random baselines.

pub mod benchmarks;
pub mod cmaes;
pub mod error;
pub mod experiment;
pub mod field;
pub mod gp;
pub mod grid;
pub mod metrics;
pub mod occupancy;
pub mod planner;
pub mod sensor;
pub mod trajectory;

pub use error::{IppError, Result};
