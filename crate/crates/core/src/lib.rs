//! Simulation and calibration engine for a Bayesian seamless phase II/III
//! dose-combination trial: response-adaptive randomisation across dose arms, a
//! constrained multinomial dose-response model for the final fit, a three-outcome
//! non-inferiority analysis against a comparator, and Monte Carlo procedures that
//! calibrate sample size, allocation ratio, drop threshold and decision thresholds.

pub mod adaptive;
pub mod calibration;
pub mod cli;
pub mod error;
pub mod inference;
pub mod model;
pub mod rng;
pub mod trial;

pub use error::{Error, Result};

/// Root seed used whenever a run does not specify one.
pub const DEFAULT_SEED: u64 = 20_200_410;
