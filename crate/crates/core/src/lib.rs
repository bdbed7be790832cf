//! Agent-based limit-order-book market simulation and calibration.
//!
//! The library has two halves. The simulation half ([`simulator`]) runs a
//! discrete-event LOB market with value, noise and market-maker agents driven
//! by a mean-reverting fundamental, and extracts per-bucket mid-price returns
//! and traded volumes as the output series. The calibration half compares
//! simulated series sets against a reference set with a high-dimensional
//! two-sample K-S statistic ([`ksdist`]), builds eligibility sets
//! ([`eligibility`]) and searches parameter space with random search, GP-based
//! Bayesian optimization or trust-region BO ([`optimize`], [`gp`]).
//!
//! Experiment orchestration (multi-seed strategy comparisons, CSV reports)
//! lives in [`harness`]; flat key=value experiment files in [`specfile`].

pub mod eligibility;
pub mod error;
pub mod gp;
pub mod harness;
pub mod ksdist;
pub mod optimize;
pub mod params;
pub mod seeds;
pub mod simulator;
pub mod specfile;

pub use error::Error;
pub type Result<T> = std::result::Result<T, Error>;
